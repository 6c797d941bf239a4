"""Command-line experiment runner.

Subcommands ``simulate``, ``estimate``, ``denoise`` and ``reproduce`` read an
optional JSON config (see ``ExperimentConfig``), write CSV/JSON artifacts into
``--out`` and record a ``manifest.json`` holding the resolved config, library
version and seeds, which is enough to regenerate every file.

Exit codes: 0 success, 2 config or usage error, 3 I/O error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .denoise import DENOISERS, denoise_and_estimate, denoise_positions, dft_magnitude, Signal1D
from .errors import BuridanError, ConfigError, DegenerateError, DomainError, NonConvergenceError
from .estimators import (
    METHODS,
    EstimationReport,
    GridSpec,
    couplet_estimate,
    estimate_taus_from_states,
    mle_estimate,
    negative_log_likelihood,
    poisson_estimate,
    state_detection_estimate,
)
from .hybrid_sim import (
    POISSON,
    ObservationSeries,
    PoissonParams,
    PolygonTargets,
    Trajectory,
    add_noise,
    simulate_line,
    simulate_poisson,
    simulate_polygon,
)
from .io import read_table, write_json, write_observations_csv, write_report, write_trajectory_csv
from .markov_core import TauMatrix, count_stationary_monomials

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
MODELS = ("line", "triangle", "polygon", "poisson")
REPRODUCIBLE = ("t1", "t2", "t3", "t4", "t5", "t6", "t7", "t8",
                "boxplots", "surfaces", "likelihood", "frequencies")

LINE_TAUS = {"01": 0.005, "10": 0.008}
TRIANGLE_TAUS = {"01": 1e-3, "02": 6e-3, "10": 2e-3, "12": 3e-3, "20": 4e-3, "21": 5e-3}
POISSON_MUS = {"01": 100.0, "02": 300.0, "10": 200.0, "12": 200.0, "20": 300.0, "21": 100.0}
NOISE_STREAM = 1  # second entropy word for the measurement-noise generator


@dataclass
class ExperimentConfig:
    """Resolved experiment settings; every field may appear in the JSON config.

    ``params`` maps "ij" keys to switching probabilities (or mean waiting
    times for ``poisson``). ``estimator`` holds ``method`` (one of METHODS),
    ``denoise`` (one of DENOISERS) and ``options`` for the denoiser.
    """

    model: str = "line"
    params: Dict[str, float] = field(default_factory=dict)
    v: Optional[float] = None
    n_steps: int = 10_000
    noise_sigma: float = 0.0
    seeds: List[int] = field(default_factory=lambda: [0])
    estimator: Dict[str, Any] = field(default_factory=dict)
    output_dir: str = "out"
    vertices: Optional[List[List[float]]] = None
    initial_state: int = 0
    sample_dt: float = 1.0
    workers: int = 1

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if not self.params:
            self.params = dict({"line": LINE_TAUS, "poisson": POISSON_MUS}.get(self.model, TRIANGLE_TAUS))
        if self.v is None:
            self.v = 0.1 if self.model == "line" else 0.01
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if int(self.n_steps) < 2:
            raise ConfigError("n_steps must be at least 2")
        if self.v <= 0 or self.noise_sigma < 0:
            raise ConfigError("v must be positive and noise_sigma nonnegative")
        if self.model == "polygon" and not self.vertices:
            raise ConfigError("polygon model needs vertices")
        est = {"method": "state_detection", "denoise": "none", "options": {}}
        est.update(self.estimator)
        if est["method"] not in METHODS:
            raise ConfigError(f"estimator method must be one of {METHODS}")
        if est["denoise"] not in DENOISERS:
            raise ConfigError(f"denoise must be one of {DENOISERS}")
        self.estimator = est
        self.seeds = [int(s) for s in self.seeds]
        self.n_steps = int(self.n_steps)
        try:
            self.targets()
            self.parameters()
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"inconsistent params/model: {exc}") from exc

    @classmethod
    def from_mapping(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def targets(self) -> PolygonTargets:
        if self.model == "line":
            return PolygonTargets.line()
        if self.vertices:
            return PolygonTargets(np.asarray(self.vertices, dtype=float))
        return PolygonTargets.triangle()

    def parameters(self):
        n = self.targets().n_vertices
        if self.model == "poisson":
            return PoissonParams.from_dict(self.params, n)
        return TauMatrix.from_dict(self.params, n)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _load_config(args) -> ExperimentConfig:
    data: Dict[str, Any] = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
    if args.seed is not None:
        data["seeds"] = args.seed
    if args.out is not None:
        data["output_dir"] = args.out
    if getattr(args, "workers", None) is not None:
        data["workers"] = args.workers
    for name in ("model", "n_steps", "v", "noise_sigma"):
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    for name in ("method", "denoise"):
        value = getattr(args, name, None)
        if value is not None:
            data.setdefault("estimator", {})[name] = value
    return ExperimentConfig.from_mapping(data)


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from exc
    return out


def _fan_out(fn: Callable, items: Sequence, workers: int) -> list:
    """Ordered map; results are joined in input order whatever the worker count."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _manifest(out: Path, command: str, cfg: Optional[ExperimentConfig], files: Dict[str, Any], **extra) -> None:
    doc = {"command": command, "version": __version__, "files": files, **extra}
    if cfg is not None:
        doc["config"] = cfg.to_dict()
    write_json(doc, out / "manifest.json")


# -- simulation -----------------------------------------------------------------

def simulate(cfg: ExperimentConfig, seed: int) -> Trajectory:
    params, targets = cfg.parameters(), cfg.targets()
    if cfg.model == "line":
        return simulate_line(params, v=cfg.v, n_steps=cfg.n_steps, seed=seed, initial_state=cfg.initial_state)
    if cfg.model == "poisson":
        return simulate_poisson(params, targets, v=cfg.v, horizon=cfg.n_steps * cfg.sample_dt,
                                sample_dt=cfg.sample_dt, seed=seed, initial_state=cfg.initial_state)
    return simulate_polygon(params, targets, v=cfg.v, n_steps=cfg.n_steps, seed=seed,
                            initial_state=cfg.initial_state)


def noise_seed(seed: int) -> int:
    """Independent integer seed for the measurement noise of replicate ``seed``."""
    return int(np.random.SeedSequence([seed, NOISE_STREAM]).generate_state(1)[0])


def _simulate_one(job) -> Dict[str, Any]:
    cfg, seed, out = job
    traj = simulate(cfg, seed)
    path = out / f"traj_{seed}.csv"
    write_trajectory_csv(traj, path)
    entry = {"seed": seed, "trajectory": path.name}
    if cfg.noise_sigma > 0:
        obs_path = out / f"obs_{seed}.csv"
        write_observations_csv(add_noise(traj, cfg.noise_sigma, noise_seed(seed)), obs_path)
        entry.update(observations=obs_path.name, noise_seed=noise_seed(seed))
    return entry


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg.output_dir)
    entries = _fan_out(_simulate_one, [(cfg, s, out) for s in cfg.seeds], cfg.workers)
    _manifest(out, "simulate", cfg, {e["trajectory"]: e for e in entries})
    print(f"wrote {len(entries)} trajectories to {out}")
    return EXIT_OK


# -- estimation -----------------------------------------------------------------

def estimate_from_table(cfg: ExperimentConfig, cols: Dict[str, np.ndarray]) -> EstimationReport:
    """Run the configured estimator on one loaded CSV table."""
    method, denoise = cfg.estimator["method"], cfg.estimator["denoise"]
    options = dict(cfg.estimator.get("options") or {})
    reference = cfg.parameters()
    names = [c for c in ("x", "y") if c in cols]
    pos = np.column_stack([cols[c] for c in names])
    targets = cfg.targets()
    if pos.shape[1] != targets.dim:
        raise ConfigError(f"input has {pos.shape[1]} coordinates but model {cfg.model!r} has {targets.dim}")
    has_states = "state" in cols
    states = cols["state"].astype(np.int64) if has_states else None

    if cfg.model == "poisson" or method == "poisson":
        if method != "poisson" or cfg.model != "poisson":
            raise ConfigError("the poisson estimator pairs only with the poisson model")
        if not has_states:
            raise ConfigError("poisson estimation needs a state column")
        traj = Trajectory(cols["t"], pos, states, cfg.v, targets, model=POISSON)
        return poisson_estimate(traj, reference, use_jump_record=False)
    if method in ("mle", "mean_frequency", "mean_variance", "mean_power") and cfg.model != "line":
        raise ConfigError(f"{method} applies only to the line model")
    if method == "mle":
        return mle_estimate(pos[:, 0], cfg.v, reference=reference)
    if method in ("mean_frequency", "mean_variance", "mean_power"):
        if not has_states:
            raise ConfigError(f"{method} needs a state column")
        traj = Trajectory(cols["t"], pos, states, cfg.v, targets)
        return couplet_estimate(method, cfg.v, traj=traj, reference=reference)
    if denoise != "none" or options.get("window"):
        if cfg.model == "line":
            raise ConfigError("denoising pipelines apply to polygon models")
        return denoise_and_estimate(pos, targets, denoise, options or None, reference)
    return state_detection_estimate(pos if pos.shape[1] > 1 else pos[:, 0], targets, reference)


def _estimate_one(job):
    cfg, path = job
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return estimate_from_table(cfg, read_table(path))


def aggregate_reports(reports: Sequence[EstimationReport]) -> Dict[str, Any]:
    """Median and interquartile range of every parameter and relative error."""
    def summary(values):
        arr = np.array([np.nan if v is None else v for v in values], dtype=float)
        arr = arr[np.isfinite(arr)]
        if arr.size == 0:
            return {"median": None, "iqr": None, "n": 0}
        q1, med, q3 = np.percentile(arr, [25, 50, 75])
        return {"median": float(med), "iqr": float(q3 - q1), "n": int(arr.size)}

    keys = list(reports[0].estimates.to_dict())
    out: Dict[str, Any] = {"n_reports": len(reports), "estimates": {}, "relative_errors": {}}
    for k in keys:
        out["estimates"][k] = summary([r.estimates.to_dict().get(k) for r in reports])
        if all(r.relative_errors is not None for r in reports):
            out["relative_errors"][k] = summary([r.relative_errors.get(k) for r in reports])
    return out


def cmd_estimate(args) -> int:
    cfg = _load_config(args)
    if not args.inputs:
        raise ConfigError("estimate needs at least one input CSV")
    out = _out_dir(cfg.output_dir)
    reports = _fan_out(_estimate_one, [(cfg, Path(p)) for p in args.inputs], cfg.workers)
    files = {}
    for path, report in zip(args.inputs, reports):
        name = f"report_{Path(path).stem}.json"
        write_report(report, out / name)
        files[name] = {"input": str(path)}
    write_json(aggregate_reports(reports), out / "aggregate.json")
    _manifest(out, "estimate", cfg, files)
    for path, report in zip(args.inputs, reports):
        print(f"{path}: " + " ".join(f"{k}={v:.6g}" for k, v in report.estimates.to_dict().items() if v is not None))
    return EXIT_OK


def cmd_denoise(args) -> int:
    cfg = _load_config(args)
    if not args.inputs:
        raise ConfigError("denoise needs at least one input CSV")
    method = cfg.estimator["denoise"]
    options = cfg.estimator.get("options") or None
    out = _out_dir(cfg.output_dir)
    files = {}
    for path in args.inputs:
        cols = read_table(path)
        pos = np.column_stack([cols[c] for c in ("x", "y") if c in cols])
        clean = denoise_positions(pos, method, options)
        name = f"denoised_{Path(path).stem}.csv"
        write_observations_csv(ObservationSeries(cols["t"], clean), out / name)
        files[name] = {"input": str(path), "method": method}
    _manifest(out, "denoise", cfg, files)
    print(f"wrote {len(files)} denoised series to {out}")
    return EXIT_OK


# -- reproduction -----------------------------------------------------------------

def _write_rows(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["%.17g" % x if isinstance(x, float) else x for x in row])


def _nan_to_blank(x):
    return "" if x is None or (isinstance(x, float) and np.isnan(x)) else x


def _latent_rows(model: str, params: Dict[str, float], v: float, sizes, seeds):
    rows = []
    for n in sizes:
        for seed in seeds:
            cfg = ExperimentConfig(model=model, params=params, v=v, n_steps=n)
            traj = simulate(cfg, seed)
            pos = traj.positions[:, 0] if model == "line" else traj.positions
            rep = state_detection_estimate(pos, traj.targets, cfg.parameters())
            for k, est in rep.estimates.to_dict().items():
                rows.append([n, seed, k, float(params[k]), _nan_to_blank(est),
                             _nan_to_blank(rep.relative_errors[k])])
    return rows


def _noisy_rows(denoiser: str, variants: Sequence[Dict[str, Any]], seeds, n_steps=10_000, sigma=0.01):
    """Triangle benchmark; errors are relative to the latent observed switching rates."""
    rows = []
    for seed in seeds:
        cfg = ExperimentConfig(model="triangle", n_steps=n_steps)
        traj = simulate(cfg, seed)
        observed = estimate_taus_from_states(traj.states, 3)
        noisy = add_noise(traj, sigma, noise_seed(seed))
        for options in variants:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                rep = denoise_and_estimate(noisy, traj.targets, denoiser, options, observed)
            label = json.dumps(options, sort_keys=True)
            for k, est in rep.estimates.to_dict().items():
                rows.append([seed, label, k, observed.to_dict()[k], _nan_to_blank(est),
                             _nan_to_blank(rep.relative_errors[k])])
    return rows


NOISY_HEADER = ["seed", "options", "param", "observed", "estimate", "relative_error"]


def reproduce(table_id: str, out: Path, full: bool, seeds: Optional[List[int]] = None) -> Dict[str, Any]:
    """Regenerate one table or figure dataset into ``out``; returns manifest info."""
    n_seeds = 20 if full else 5
    seeds = list(seeds) if seeds is not None else list(range(n_seeds))
    info: Dict[str, Any] = {"seeds": seeds, "full": full}
    path = out / f"{table_id}.csv"
    if table_id == "t1":
        rows = _latent_rows("line", LINE_TAUS, 0.1, (10_000, 100_000), seeds)
        _write_rows(path, ["n_steps", "seed", "param", "input", "estimate", "relative_error"], rows)
        info["v"] = 0.1
    elif table_id == "t2":
        rows = _latent_rows("triangle", TRIANGLE_TAUS, 0.01, (10_000, 100_000), seeds)
        _write_rows(path, ["n_steps", "seed", "param", "input", "estimate", "relative_error"], rows)
    elif table_id == "t3":
        rows = _noisy_rows("regression", [{"window": w} for w in (1, 3, 5, 10, 15, 20)], seeds)
        _write_rows(path, NOISY_HEADER, rows)
    elif table_id in ("t4", "t5", "t6", "t7"):
        denoiser = {"t4": "lwpr", "t5": "wavelet", "t6": "butterworth", "t7": "tv"}[table_id]
        _write_rows(path, NOISY_HEADER, _noisy_rows(denoiser, [{}], seeds))
        info["denoiser"] = denoiser
    elif table_id == "t8":
        _write_rows(path, ["n_states", "monomials"], [[n, count_stationary_monomials(n)] for n in range(2, 6)])
        info["seeds"] = []
    elif table_id == "boxplots":
        sizes = (1_000, 5_000, 20_000, 100_000) if full else (1_000, 5_000, 20_000)
        rows = []
        for n in sizes:
            for seed in seeds:
                cfg = ExperimentConfig(model="line", params={"01": 0.05, "10": 0.08}, n_steps=n)
                traj = simulate(cfg, seed)
                for method in ("mean_frequency", "mean_variance", "mean_power"):
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        rep = couplet_estimate(method, cfg.v, traj=traj)
                    raw = rep.metadata["raw_estimates"]
                    for k in ("01", "10"):
                        rows.append([method, n, seed, k, cfg.params[k], raw[k], raw[k] - cfg.params[k]])
        _write_rows(path, ["couplet", "n_steps", "seed", "param", "input", "estimate", "residual"], rows)
        info["sizes"] = list(sizes)
    elif table_id == "surfaces":
        grid = np.linspace(0.01, 0.1, 19 if full else 5)
        n_steps = 20_000
        rows = []
        for t01 in grid:
            for t10 in grid:
                errs = []
                for seed in seeds:
                    cfg = ExperimentConfig(model="line", params={"01": float(t01), "10": float(t10)}, n_steps=n_steps)
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        rep = couplet_estimate("mean_frequency", cfg.v, traj=simulate(cfg, seed))
                    raw = rep.metadata["raw_estimates"]
                    errs.append((abs(raw["01"] - t01), abs(raw["10"] - t10)))
                e = np.mean(errs, axis=0)
                rows.append([float(t01), float(t10), n_steps, len(seeds), float(e[0]), float(e[1])])
        _write_rows(path, ["tau01", "tau10", "n_steps", "n_seeds", "mean_abs_error_01", "mean_abs_error_10"], rows)
        info["grid"] = [float(g) for g in grid]
    elif table_id == "likelihood":
        cfg = ExperimentConfig(model="line", params={"01": 0.05, "10": 0.08}, n_steps=10_000)
        x = simulate(cfg, seeds[0]).positions[:, 0]
        axis = GridSpec().axis()
        rows = [[float(a), float(b), negative_log_likelihood(x, a, b, cfg.v)] for a in axis for b in axis]
        _write_rows(path, ["tau01", "tau10", "negative_log_likelihood"], rows)
        rep = mle_estimate(x, cfg.v, reference=cfg.parameters())
        write_report(rep, out / "likelihood_estimate.json")
        info["seeds"] = seeds[:1]
    elif table_id == "frequencies":
        cfg = ExperimentConfig(model="triangle", n_steps=10_000)
        traj = simulate(cfg, seeds[0])
        noisy = add_noise(traj, 0.01, noise_seed(seeds[0]))
        mag = dft_magnitude(Signal1D(noisy.positions[:, 0]))
        _write_rows(path, ["bin", "magnitude"], [[k, float(m)] for k, m in enumerate(mag)])
        _write_rows(out / "frequencies_signal.csv", ["t", "x"],
                    [[float(t), float(x)] for t, x in zip(noisy.times, noisy.positions[:, 0])])
        info["seeds"] = seeds[:1]
    else:
        raise ConfigError(f"unknown reproduction id {table_id!r}")
    return info


def cmd_reproduce(args) -> int:
    out = _out_dir(args.out or "out")
    seeds = args.seed
    info = reproduce(args.table_id, out, args.full, seeds)
    _manifest(out, "reproduce", None, {f"{args.table_id}.csv": info}, table_id=args.table_id)
    print(f"wrote {args.table_id} to {out}")
    return EXIT_OK


# -- entry point --------------------------------------------------------------------

def _seed_list(text: str) -> List[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=_seed_list, help="comma-separated seeds, e.g. 0,1,2")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="parallel worker processes")

    parser = argparse.ArgumentParser(prog="buridan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate trajectories")
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--n-steps", dest="n_steps", type=int)
    p.add_argument("--v", type=float)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", parents=[common], help="estimate parameters from CSV files")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--v", type=float)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--denoise", choices=DENOISERS)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("denoise", parents=[common], help="denoise observation CSV files")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--denoise", choices=[d for d in DENOISERS if d != "regression"])
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("reproduce", parents=[common], help="regenerate a table or figure dataset")
    p.add_argument("table_id", choices=REPRODUCIBLE)
    p.add_argument("--full", action="store_true", help="full-scale replicate counts")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, DegenerateError, NonConvergenceError, ArithmeticError, BuridanError, ValueError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
