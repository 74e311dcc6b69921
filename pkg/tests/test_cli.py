import csv
import io
from contextlib import redirect_stdout

import numpy as np
import pytest

from decfl.cli import ExperimentConfig, bootstrap_ci, main, run, validate
from decfl.data import write_synth_idx


@pytest.fixture(scope="module")
def idx_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_idx")
    write_synth_idx(root, n_train_per_class=40, n_test_per_class=10, seed=1)
    return root


def _write_config(path, text):
    path.write_text(text)
    return str(path)


def test_validate_reports_diagnostics(tmp_path):
    cfg = _write_config(tmp_path / "bad.toml", """
experiment = "fl_run"
seeds = [0]

[graph]
topology = "k_regular"
n = 5
k = 3

[fl]
dataset = "/nonexistent/dir"
dropout_mode = "sometimes"
""")
    config = ExperimentConfig.from_file(cfg)
    fields = {f for f, _ in validate(config)}
    assert "graph.k" in fields
    assert "fl.dataset" in fields
    assert "fl.dropout_mode" in fields
    assert main(["validate", "--config", cfg]) == 2


def test_validate_unknown_kind(tmp_path):
    cfg = _write_config(tmp_path / "k.toml", 'experiment = "mystery"\n')
    assert validate(ExperimentConfig.from_file(cfg))[0][0] == "experiment"


def test_validate_flags_absent_dataset(tmp_path):
    cfg = _write_config(tmp_path / "d.toml", 'experiment = "fl_run"\n')
    diags = validate(ExperimentConfig.from_file(cfg))
    assert ("fl.dataset", "dataset directory is required") in diags


def test_run_exit_code_on_config_error(tmp_path, capsys):
    cfg = _write_config(tmp_path / "k.toml", 'experiment = "mystery"\n')
    assert main(["run", "--config", cfg]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 2


def test_vsteady_scaling_run(tmp_path):
    cfg = _write_config(tmp_path / "v.toml", f"""
experiment = "vsteady_scaling"
seeds = [0]
out = "{tmp_path}/out"
families = ["k_regular"]
sizes = [32, 64, 128]
mean_degree = 4
""")
    paths = run(ExperimentConfig.from_file(cfg))
    text = paths[0].read_text()
    assert "k_regular,32,0,0.17677" in text  # 1/sqrt(32)
    assert "# fit k_regular alpha=0.5000" in text


def test_mixing_scan_run(tmp_path):
    cfg = _write_config(tmp_path / "m.toml", f"""
experiment = "mixing_scan"
seeds = [1]
out = "{tmp_path}/out"
families = ["cycle"]
sizes = [8, 16]
tv_tol = 1e-2
""")
    (path,) = run(ExperimentConfig.from_file(cfg))
    rows = [r for r in path.read_text().splitlines() if r.startswith("cycle")]
    r8, r16 = (int(r.split(",")[-1]) for r in rows)
    assert r16 > r8


def test_diffusion_subcommand_stdout():
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(["diffusion", "--topology", "k_regular", "--n", "16",
                     "--k", "4", "--d", "200", "--rounds", "10", "--seed", "3"])
    assert code == 0
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == ["round", "sigma_ap", "sigma_an"]
    assert len(rows) == 12  # header + rounds 0..10
    assert float(rows[1][1]) > float(rows[-1][1])  # sigma_ap shrinks


def test_vsteady_subcommand_stdout():
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(["vsteady", "--family", "k_regular",
                     "--sizes", "16", "32", "64", "--mean-degree", "4"])
    assert code == 0
    out = buf.getvalue()
    assert "k_regular,16,0,0.25" in out
    assert "# fit k_regular alpha=0.5" in out


def test_synth_data_subcommand(tmp_path, capsys):
    out = tmp_path / "data"
    assert main(["synth-data", "--out", str(out),
                 "--train-per-class", "3", "--test-per-class", "2"]) == 0
    assert (out / "train-images-idx3-ubyte").exists()
    assert (out / "t10k-labels-idx1-ubyte").exists()


def _fl_config(tmp_path, idx_dir, extra=""):
    return _write_config(tmp_path / "fl.toml", f"""
experiment = "fl_run"
seeds = [0, 1]
out = "{tmp_path}/out"

[graph]
topology = "complete"
n = 4

[fl]
dataset = "{idx_dir}"
items_per_node = 64
rounds = 3
gain_mode = "exact"
{extra}
""")


def test_fl_run_with_summary(tmp_path, idx_dir):
    cfg = _fl_config(tmp_path, idx_dir)
    paths = run(ExperimentConfig.from_file(cfg))
    assert len(paths) == 2
    for p in paths:
        rows = [r for r in p.read_text().splitlines() if not r.startswith("#")]
        assert rows[0].startswith("round,mean_test_loss")
        assert len(rows) == 4
    summary = paths[0].parent / "fl_summary.csv"
    lines = [r for r in summary.read_text().splitlines() if not r.startswith("#")]
    assert "mean_test_loss_mean" in lines[0]
    assert len(lines) == 4


def test_fl_run_byte_identical_reruns(tmp_path, idx_dir):
    cfg = _fl_config(tmp_path, idx_dir)
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    for out in (out1, out2):
        assert main(["run", "--config", cfg, "--seed", "5",
                     "--out", str(out), "--no-timestamp", "--quiet"]) == 0
    a = (out1 / "fl_seed5.csv").read_bytes()
    b = (out2 / "fl_seed5.csv").read_bytes()
    assert a == b


def test_baseline_central(tmp_path, idx_dir):
    cfg = _write_config(tmp_path / "c.toml", f"""
experiment = "baseline_central"
seeds = [0]
out = "{tmp_path}/out"

[fl]
dataset = "{idx_dir}"
rounds = 4
""")
    (path,) = run(ExperimentConfig.from_file(cfg))
    rows = [r for r in path.read_text().splitlines() if not r.startswith("#")]
    assert rows[0] == "round,mean_test_loss,mean_test_accuracy"
    assert len(rows) == 5


def test_fl_gain_modes(tmp_path, idx_dir):
    for mode, extra in (("degrees", 'gain_mode = "degrees"'),
                        ("family", 'gain_mode = "family"\nn_estimate = 4')):
        cfg = _write_config(tmp_path / f"{mode}.toml", f"""
experiment = "fl_run"
seeds = [0]
out = "{tmp_path}/out_{mode}"

[graph]
topology = "complete"
n = 4

[fl]
dataset = "{idx_dir}"
items_per_node = 32
rounds = 2
{extra}
""")
        paths = run(ExperimentConfig.from_file(cfg))
        assert paths[0].exists()


def test_bootstrap_ci_brackets_mean():
    vals = [1.0, 2.0, 3.0, 4.0, 5.0]
    lo, hi = bootstrap_ci(vals)
    assert lo <= np.mean(vals) <= hi
    assert lo >= 1.0 and hi <= 5.0


def test_fl_run_parallel_workers_match_serial(tmp_path, idx_dir):
    def cfg_text(workers, out):
        return f"""
experiment = "fl_run"
seeds = [0, 1]
workers = {workers}
out = "{out}"

[graph]
topology = "complete"
n = 4

[fl]
dataset = "{idx_dir}"
items_per_node = 32
rounds = 2
"""
    serial = tmp_path / "serial.toml"
    serial.write_text(cfg_text(1, f"{tmp_path}/serial"))
    par = tmp_path / "par.toml"
    par.write_text(cfg_text(2, f"{tmp_path}/par"))
    for cfg in (serial, par):
        c = ExperimentConfig.from_file(str(cfg))
        c.timestamp = False
        run(c)
    for seed in (0, 1):
        a = (tmp_path / "serial" / f"fl_seed{seed}.csv").read_bytes()
        b = (tmp_path / "par" / f"fl_seed{seed}.csv").read_bytes()
        assert a == b


def test_fl_sweep_emits_per_size_files(tmp_path, idx_dir):
    cfg = _write_config(tmp_path / "sweep.toml", f"""
experiment = "fl_sweep"
seeds = [0]
out = "{tmp_path}/out"
sweep_sizes = [2, 4]

[graph]
topology = "complete"

[fl]
dataset = "{idx_dir}"
items_per_node = 32
rounds = 2
""")
    paths = run(ExperimentConfig.from_file(cfg))
    names = sorted(p.name for p in paths)
    assert names == ["fl_n2_seed0.csv", "fl_n4_seed0.csv"]


def test_runtime_error_exit_code(tmp_path):
    empty = tmp_path / "empty_dataset"
    empty.mkdir()
    cfg = _write_config(tmp_path / "r.toml", f"""
experiment = "fl_run"
seeds = [0]
out = "{tmp_path}/out"

[fl]
dataset = "{empty}"
""")
    # validate passes (directory exists) but loading the IDX files fails
    assert main(["run", "--config", cfg, "--quiet"]) == 3
