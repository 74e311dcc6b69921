"""Experiment runner: config-driven presets emitting CSV artifacts.

Subcommands:
  run        execute a TOML config (experiment kind + parameters)
  validate   report config diagnostics without running anything
  vsteady    stationary-norm / mixing scan straight from flags
  diffusion  per-round sigma trace for one graph
  synth-data write the synthetic digit corpus in MNIST IDX layout

Exit codes: 0 success, 2 config error, 3 runtime error.
"""

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import diffusion as diffusion_mod
from . import graph as graph_mod
from . import neural, spectral
from .data import load_idx_dir, write_synth_idx
from .errors import ConfigError, DecflError
from .federation import (
    DropoutConfig,
    FederationState,
    RoundMetrics,
    RunConfig,
    estimate_n_gossip,
    partition,
    pipeline_gain,
    run_round,
)

EXPERIMENT_KINDS = ("vsteady_scaling", "diffusion_trace", "fl_run", "fl_sweep",
                    "mixing_scan", "baseline_central")

_GRAPH_DEFAULTS = {"topology": "complete", "n": 16}


@dataclass
class ExperimentConfig:
    kind: str
    seeds: list
    out_dir: str = "results"
    timestamp: bool = True
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"invalid TOML: {e}")
        kind = raw.get("experiment")
        seeds = raw.get("seeds", [0])
        return cls(kind=kind, seeds=list(seeds),
                   out_dir=raw.get("out", "results"), raw=raw)


def validate(config: ExperimentConfig):
    """All violated preconditions as (field, message) diagnostics."""
    diags = []
    if config.kind not in EXPERIMENT_KINDS:
        diags.append(("experiment", f"unknown kind {config.kind!r}; "
                                    f"expected one of {EXPERIMENT_KINDS}"))
        return diags
    if not config.seeds:
        diags.append(("seeds", "at least one seed required"))
    raw = config.raw
    gp = {**_GRAPH_DEFAULTS, **raw.get("graph", {})}
    topology = gp.get("topology")
    n = gp.get("n", 16)
    if topology == "k_regular":
        k = gp.get("k", 4)
        if (n * k) % 2:
            diags.append(("graph.k", f"n*k must be even, got n={n}, k={k}"))
    if topology == "er_gnp" and not 0 <= gp.get("p", 0.1) <= 1:
        diags.append(("graph.p", "edge probability must lie in [0, 1]"))
    fl = raw.get("fl", {})
    if fl.get("partition", "iid") == "zipf" and fl.get("alpha", 1.8) < 0:
        diags.append(("fl.alpha", "zipf alpha must be >= 0"))
    if fl.get("dropout_mode", "none") not in ("none", "link", "node"):
        diags.append(("fl.dropout_mode", "must be none, link or node"))
    if not 0 <= fl.get("dropout_p", 1.0) <= 1:
        diags.append(("fl.dropout_p", "must lie in [0, 1]"))
    if fl.get("gain_mode", "none") not in ("none", "exact", "degrees", "family"):
        diags.append(("fl.gain_mode", "must be none, exact, degrees or family"))
    if config.kind in ("fl_run", "fl_sweep", "baseline_central"):
        dataset = fl.get("dataset")
        if dataset is None:
            diags.append(("fl.dataset", "dataset directory is required"))
        elif not Path(dataset).exists():
            diags.append(("fl.dataset", f"dataset directory {dataset} does not exist"))
    return diags


def _make_graph(gp, seed):
    name = gp["topology"]
    kwargs = {k: v for k, v in gp.items() if k not in ("topology", "n")}
    return graph_mod.generate(name, gp["n"], seed=seed, **kwargs)


def _csv_writer(path, header, timestamp=True):
    fh = open(path, "w", newline="", encoding="utf-8")
    if timestamp:
        fh.write(f"# generated {datetime.now(timezone.utc).isoformat()}\n")
    w = csv.writer(fh)
    w.writerow(header)
    return fh, w


def _run_vsteady_scaling(config, out_dir):
    raw = config.raw
    families = raw.get("families", ["er_gnp", "k_regular", "barabasi_albert"])
    sizes = raw.get("sizes", [128, 256, 512, 1024])
    mean_degree = raw.get("mean_degree", 8)
    paths = []
    for seed in config.seeds:
        path = out_dir / f"vsteady_scaling_seed{seed}.csv"
        fh, w = _csv_writer(path, ["graph_family", "n", "seed", "norm",
                                   "lambda2", "empirical_rounds"],
                            config.timestamp)
        with fh:
            norms = {f: [] for f in families}
            for family in families:
                for n in sizes:
                    g = _generate_connected(family, n, mean_degree, seed)
                    m = spectral.markov_from_graph(g)
                    ss = spectral.steady_state_exact(m)
                    norms[family].append((n, ss.norm))
                    w.writerow([family, n, seed, f"{ss.norm:.12g}", "", ""])
            for family in families:
                alpha = spectral.fit_scaling_exponent(norms[family])
                fh.write(f"# fit {family} alpha={alpha:.6f}\n")
        paths.append(path)
    return paths


def _generate_connected(family, n, mean_degree, seed, max_tries=200):
    for t in range(max_tries):
        s = seed * 1_000_003 + n * 101 + t
        if family == "er_gnp":
            g = graph_mod.er_gnp(n, mean_degree / (n - 1), seed=s)
        elif family == "k_regular":
            g = graph_mod.k_regular(n, mean_degree, seed=s)
        elif family == "barabasi_albert":
            g = graph_mod.barabasi_albert(n, max(1, mean_degree // 2), seed=s)
        elif family == "complete":
            g = graph_mod.complete(n)
        elif family == "cycle":
            g = graph_mod.cycle(n)
        elif family == "path":
            g = graph_mod.path(n)
        elif family == "star":
            g = graph_mod.star(n)
        elif family == "config_powerlaw":
            g = graph_mod.config_powerlaw(n, 2.5, max(1, mean_degree // 2), seed=s)
        else:
            raise ConfigError(f"unknown family {family!r}", field="families")
        if graph_mod.is_connected(g):
            return g
    raise ConfigError(f"no connected {family} graph found in {max_tries} tries")


def _run_mixing_scan(config, out_dir):
    raw = config.raw
    families = raw.get("families", ["cycle", "k_regular"])
    sizes = raw.get("sizes", [16, 32, 64])
    mean_degree = raw.get("mean_degree", 8)
    tol = raw.get("tv_tol", 1e-3)
    paths = []
    for seed in config.seeds:
        path = out_dir / f"mixing_scan_seed{seed}.csv"
        fh, w = _csv_writer(path, ["graph_family", "n", "seed", "norm",
                                   "lambda2", "empirical_rounds"],
                            config.timestamp)
        with fh:
            for family in families:
                for n in sizes:
                    g = _generate_connected(family, n, mean_degree, seed)
                    m = spectral.markov_from_graph(g)
                    ss = spectral.steady_state_exact(m)
                    est = spectral.mixing_estimate(m, "empirical", tol=tol)
                    w.writerow([family, n, seed, f"{ss.norm:.12g}",
                                f"{est.second_eigenvalue_modulus:.12g}",
                                est.empirical_rounds])
        paths.append(path)
    return paths


def _run_diffusion_trace(config, out_dir):
    raw = config.raw
    gp = {**_GRAPH_DEFAULTS, **raw.get("graph", {})}
    dp = raw.get("diffusion", {})
    d = dp.get("d", 1000)
    sigma_init = dp.get("sigma_init", 1.0)
    sigma_noise = dp.get("sigma_noise", 0.0)
    rounds = dp.get("rounds", 100)
    paths = []
    for seed in config.seeds:
        g = _make_graph(gp, seed)
        tr = diffusion_mod.run_diffusion(g, d, sigma_init, sigma_noise, rounds, seed)
        path = out_dir / f"diffusion_seed{seed}.csv"
        fh, w = _csv_writer(path, ["round", "sigma_ap", "sigma_an"], config.timestamp)
        with fh:
            for t in range(len(tr.sigma_ap)):
                w.writerow([t, f"{tr.sigma_ap[t]:.10g}", f"{tr.sigma_an[t]:.10g}"])
        paths.append(path)
    return paths


def _load_fl_data(fl):
    dataset = fl.get("dataset")
    if dataset:
        return load_idx_dir(dataset)
    raise ConfigError("fl.dataset directory is required (use `decfl synth-data` "
                      "to create one)", field="fl.dataset")


def _resolve_gain(fl, g, seed):
    mode = fl.get("gain_mode", "none")
    if mode == "none":
        return 1.0
    if mode == "exact":
        return pipeline_gain(graph=g)
    n_est = fl.get("n_estimate")
    if n_est is None:
        rounds = graph_mod.diameter(g)
        n_est = float(np.median(estimate_n_gossip(
            g, fl.get("gossip_samples", 2000), rounds, seed=seed)))
    if mode == "degrees":
        rng = np.random.default_rng(seed)
        k = min(g.n, fl.get("degree_sample_size", g.n))
        sample = g.degree[rng.choice(g.n, size=k, replace=False)]
        return pipeline_gain(degree_sample=sample, n_estimate=n_est)
    return pipeline_gain(family=fl.get("family", "regular_like"),
                         n_estimate=n_est,
                         fitted_exponent=fl.get("fitted_exponent"))


def _fl_state(config, seed, n_override=None, data=None):
    raw = config.raw
    gp = {**_GRAPH_DEFAULTS, **raw.get("graph", {})}
    if n_override is not None:
        gp = {**gp, "n": n_override}
    fl = raw.get("fl", {})
    x_train, y_train, x_test, y_test = data if data else _load_fl_data(fl)
    g = _make_graph(gp, seed)
    part = partition(y_train, g.n, scheme=fl.get("partition", "iid"),
                     alpha=fl.get("alpha", 1.8),
                     items_per_node=fl.get("items_per_node"),
                     seed=seed)
    spec = neural.MlpSpec(tuple(fl.get("layers", [784, 128, 64, 10])),
                          activation=fl.get("activation", "relu"))
    cfg = RunConfig(
        spec=spec,
        optimiser=fl.get("optimiser", "sgd_momentum"),
        lr=fl.get("lr", 1e-3),
        momentum=fl.get("momentum", 0.5),
        weight_decay=fl.get("weight_decay", 1e-2),
        batches_per_round=fl.get("batches_per_round", 8),
        batch_size=fl.get("batch_size", 16),
        gain=_resolve_gain(fl, g, seed),
    )
    dropout = DropoutConfig(mode=fl.get("dropout_mode", "none"),
                            p=fl.get("dropout_p", 1.0))
    return FederationState(g, x_train, y_train, part, x_test, y_test,
                           cfg, dropout, seed=seed)


def _run_fl_seed(config, seed, out_dir, n_override=None, tag=""):
    raw = config.raw
    rounds = raw.get("fl", {}).get("rounds", 50)
    state = _fl_state(config, seed, n_override)
    name = f"fl{tag}_seed{seed}.csv"
    path = out_dir / name
    fh, w = _csv_writer(path, list(RoundMetrics.FIELDS), config.timestamp)
    with fh:
        # rounds rescale to wall-clock-equivalent units by this factor
        # (local minibatches between communications)
        fh.write(f"# wall_clock_multiplier {state.config.batches_per_round}\n")
        for _ in range(rounds):
            m = run_round(state)
            w.writerow([f"{v:.10g}" if isinstance(v, float) else v
                        for v in m.as_row()])
            fh.flush()
    return path


def _run_fl(config, out_dir):
    if len(config.seeds) > 1 and config.raw.get("workers", 1) > 1:
        with ProcessPoolExecutor(max_workers=config.raw["workers"]) as pool:
            futs = [pool.submit(_run_fl_seed, config, s, out_dir)
                    for s in config.seeds]
            paths = [f.result() for f in futs]
    else:
        paths = [_run_fl_seed(config, s, out_dir) for s in config.seeds]
    _write_summary(paths, out_dir / "fl_summary.csv", config.timestamp)
    return paths


def _run_fl_sweep(config, out_dir):
    sizes = config.raw.get("sweep_sizes", [4, 8, 16])
    paths = []
    for n in sizes:
        size_paths = [_run_fl_seed(config, seed, out_dir,
                                   n_override=n, tag=f"_n{n}")
                      for seed in config.seeds]
        paths.extend(size_paths)
        if len(size_paths) > 1:
            _write_summary(size_paths, out_dir / f"fl_n{n}_summary.csv",
                           config.timestamp)
    return paths


def _run_baseline_central(config, out_dir):
    """Single node trained on the union of all per-node data."""
    raw = config.raw
    fl = raw.get("fl", {})
    x_train, y_train, x_test, y_test = _load_fl_data(fl)
    rounds = fl.get("rounds", 50)
    spec = neural.MlpSpec(tuple(fl.get("layers", [784, 128, 64, 10])),
                          activation=fl.get("activation", "relu"))
    paths = []
    for seed in config.seeds:
        model = neural.init_model(spec, gain=1.0, seed=seed)
        opt = neural.make_optimiser(model, fl.get("optimiser", "sgd_momentum"),
                                    lr=fl.get("lr", 1e-3),
                                    momentum=fl.get("momentum", 0.5),
                                    weight_decay=fl.get("weight_decay", 1e-2))
        rng = np.random.default_rng(seed)
        bs = fl.get("batch_size", 16)
        bpr = fl.get("batches_per_round", 8)
        path = out_dir / f"baseline_central_seed{seed}.csv"
        fh, w = _csv_writer(path, ["round", "mean_test_loss", "mean_test_accuracy"],
                            config.timestamp)
        with fh:
            for t in range(1, rounds + 1):
                for _ in range(bpr):
                    bi = rng.integers(0, len(x_train), bs)
                    _, grads = neural.loss_and_grads(model, x_train[bi], y_train[bi])
                    neural.opt_step(model, grads, opt)
                w.writerow([t, f"{neural.batch_loss(model, x_test, y_test):.10g}",
                            f"{neural.accuracy(model, x_test, y_test):.10g}"])
        paths.append(path)
    return paths


def _read_metric_csv(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(r for r in fh if not r.startswith("#"))
        header = next(reader)
        for row in reader:
            rows.append([float(v) for v in row])
    return header, np.array(rows)


def bootstrap_ci(values, n_boot=1000, seed=0):
    """95% percentile bootstrap interval for the mean of `values`."""
    rng = np.random.default_rng(seed)
    values = np.asarray(values, dtype=np.float64)
    means = rng.choice(values, size=(n_boot, len(values)), replace=True).mean(axis=1)
    return float(np.percentile(means, 2.5)), float(np.percentile(means, 97.5))


def _write_summary(paths, out_path, timestamp):
    """Per-round mean and 95% bootstrap CI across seed CSVs."""
    per_seed = [_read_metric_csv(p) for p in paths]
    header = per_seed[0][0]
    arrays = [a for _, a in per_seed]
    rounds = min(len(a) for a in arrays)
    cols = header[1:]
    out_header = ["round"]
    for c in cols:
        out_header += [f"{c}_mean", f"{c}_lo95", f"{c}_hi95"]
    fh, w = _csv_writer(out_path, out_header, timestamp)
    with fh:
        for t in range(rounds):
            row = [int(arrays[0][t, 0])]
            for j in range(1, len(header)):
                vals = np.array([a[t, j] for a in arrays])
                lo, hi = bootstrap_ci(vals)
                row += [f"{vals.mean():.10g}", f"{lo:.10g}", f"{hi:.10g}"]
            w.writerow(row)
    return out_path


_RUNNERS = {
    "vsteady_scaling": _run_vsteady_scaling,
    "mixing_scan": _run_mixing_scan,
    "diffusion_trace": _run_diffusion_trace,
    "fl_run": _run_fl,
    "fl_sweep": _run_fl_sweep,
    "baseline_central": _run_baseline_central,
}


def run(config: ExperimentConfig):
    diags = validate(config)
    if diags:
        raise ConfigError("; ".join(f"{f}: {m}" for f, m in diags))
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[config.kind](config, out_dir)


def _build_parser():
    ap = argparse.ArgumentParser(prog="decfl", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a config file")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--seed", type=int, action="append", default=None,
                       help="override config seeds (repeatable)")
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--quiet", action="store_true")
    run_p.add_argument("--no-timestamp", action="store_true",
                       help="suppress the timestamp header for byte-stable CSVs")

    val_p = sub.add_parser("validate", help="check a config file")
    val_p.add_argument("--config", required=True)

    vs_p = sub.add_parser("vsteady", help="stationary norms + mixing as CSV")
    vs_p.add_argument("--family", action="append", default=None)
    vs_p.add_argument("--sizes", type=int, nargs="+", default=[128, 256, 512, 1024])
    vs_p.add_argument("--mean-degree", type=int, default=8)
    vs_p.add_argument("--seed", type=int, action="append", default=None)
    vs_p.add_argument("--mixing", action="store_true",
                      help="also compute lambda2 and empirical rounds")
    vs_p.add_argument("--tv-tol", type=float, default=1e-3)

    df_p = sub.add_parser("diffusion", help="per-round sigma trace as CSV")
    df_p.add_argument("--topology", default="k_regular")
    df_p.add_argument("--n", type=int, default=256)
    df_p.add_argument("--k", type=int, default=32)
    df_p.add_argument("--p", type=float, default=None)
    df_p.add_argument("--m", type=int, default=None)
    df_p.add_argument("--d", type=int, default=10000)
    df_p.add_argument("--sigma-init", type=float, default=1.0)
    df_p.add_argument("--sigma-noise", type=float, default=0.0)
    df_p.add_argument("--rounds", type=int, default=200)
    df_p.add_argument("--seed", type=int, default=0)

    sd_p = sub.add_parser("synth-data", help="write synthetic IDX corpus")
    sd_p.add_argument("--out", required=True)
    sd_p.add_argument("--train-per-class", type=int, default=205)
    sd_p.add_argument("--test-per-class", type=int, default=52)
    sd_p.add_argument("--seed", type=int, default=0)
    return ap


def _cmd_run(args):
    config = ExperimentConfig.from_file(args.config)
    if args.seed:
        config.seeds = args.seed
    if args.out:
        config.out_dir = args.out
    if args.no_timestamp:
        config.timestamp = False
    paths = run(config)
    if not args.quiet:
        for p in paths:
            print(p)
    return 0


def _cmd_validate(args):
    config = ExperimentConfig.from_file(args.config)
    diags = validate(config)
    for f, m in diags:
        print(f"{f}: {m}")
    return 0 if not diags else 2


def _cmd_vsteady(args):
    families = args.family or ["er_gnp", "k_regular", "barabasi_albert"]
    seeds = args.seed or [0]
    w = csv.writer(sys.stdout)
    w.writerow(["graph_family", "n", "seed", "norm", "lambda2", "empirical_rounds"])
    fits = {}
    for family in families:
        pts = []
        for n in args.sizes:
            for seed in seeds:
                g = _generate_connected(family, n, args.mean_degree, seed)
                m = spectral.markov_from_graph(g)
                ss = spectral.steady_state_exact(m)
                lam, rounds = "", ""
                if args.mixing:
                    est = spectral.mixing_estimate(m, "empirical", tol=args.tv_tol)
                    lam = f"{est.second_eigenvalue_modulus:.12g}"
                    rounds = est.empirical_rounds
                pts.append((n, ss.norm))
                w.writerow([family, n, seed, f"{ss.norm:.12g}", lam, rounds])
        if len({p[0] for p in pts}) >= 3:
            fits[family] = spectral.fit_scaling_exponent(pts)
    for family, alpha in fits.items():
        print(f"# fit {family} alpha={alpha:.6f}")
    return 0


def _cmd_diffusion(args):
    kwargs = {}
    if args.topology == "k_regular":
        kwargs["k"] = args.k
    if args.p is not None:
        kwargs["p"] = args.p
    if args.m is not None:
        kwargs["m"] = args.m
    g = graph_mod.generate(args.topology, args.n, seed=args.seed, **kwargs)
    tr = diffusion_mod.run_diffusion(g, args.d, args.sigma_init,
                                     args.sigma_noise, args.rounds, args.seed)
    w = csv.writer(sys.stdout)
    w.writerow(["round", "sigma_ap", "sigma_an"])
    for t in range(len(tr.sigma_ap)):
        w.writerow([t, f"{tr.sigma_ap[t]:.10g}", f"{tr.sigma_an[t]:.10g}"])
    return 0


def _cmd_synth_data(args):
    out = write_synth_idx(args.out, args.train_per_class, args.test_per_class,
                          args.seed)
    print(out)
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "validate": _cmd_validate,
                "vsteady": _cmd_vsteady, "diffusion": _cmd_diffusion,
                "synth-data": _cmd_synth_data}
    try:
        return handlers[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (DecflError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
