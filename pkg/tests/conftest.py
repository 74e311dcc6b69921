import numpy as np
import pytest

from decfl.data import load_idx_dir, write_synth_idx

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, ok, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        line = f"criterion {num:2d} [{status}] {name}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def digit_data(tmp_path_factory):
    """Synthetic digit corpus written and read through the IDX pipeline.

    2050 train / 520 test images, balanced over 10 classes. Set
    DECFL_MNIST_DIR to a directory with real MNIST IDX files to run the
    federated tests on MNIST instead.
    """
    import os

    mnist_dir = os.environ.get("DECFL_MNIST_DIR")
    if mnist_dir:
        x_train, y_train, x_test, y_test = load_idx_dir(mnist_dir)
        return x_train[:2048], y_train[:2048], x_test[:512], y_test[:512]
    root = tmp_path_factory.mktemp("idx")
    write_synth_idx(root, n_train_per_class=205, n_test_per_class=52, seed=0)
    return load_idx_dir(root)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
