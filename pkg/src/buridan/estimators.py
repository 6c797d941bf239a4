"""Parameter estimators for the switching models.

The line model admits closed-form couplet inversions and a beta-likelihood
fit. Any model can instead be handled by counting transitions in a state
sequence recovered geometrically from consecutive positions.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.optimize import minimize

from . import feature_stats as fs
from .errors import DegenerateError, DomainError, InfeasibleMomentsError
from .hybrid_sim import PoissonParams, PolygonTargets
from .markov_core import TauMatrix, pair_key

METHODS = ("mean_frequency", "mean_variance", "mean_power", "mle", "state_detection", "poisson")


class OutOfRangeWarning(UserWarning):
    """An estimate fell outside the range a probability can take."""


class BoundaryWarning(UserWarning):
    """A likelihood minimum sits on the edge of the search box."""


@dataclass(frozen=True)
class StateSequence:
    states: np.ndarray
    n_states: int

    def __post_init__(self):
        s = np.asarray(self.states, dtype=np.int64)
        if s.size and (s.min() < 0 or s.max() >= self.n_states):
            raise DomainError("state index out of range")
        object.__setattr__(self, "states", s)

    def __len__(self):
        return len(self.states)


def _as_sequence(states, n_states: Optional[int] = None) -> StateSequence:
    if isinstance(states, StateSequence):
        return states
    s = np.asarray(states, dtype=np.int64)
    if n_states is None:
        n_states = max(2, int(s.max()) + 1 if s.size else 2)
    return StateSequence(s, n_states)


@dataclass
class EstimationReport:
    method: str
    estimates: Union[TauMatrix, PoissonParams]
    reference: Optional[Union[TauMatrix, PoissonParams]] = None
    relative_errors: Optional[Dict[str, Optional[float]]] = None
    warnings: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.reference is not None and self.relative_errors is None:
            self.relative_errors = relative_errors(self.estimates, self.reference)

    def with_reference(self, reference) -> "EstimationReport":
        return EstimationReport(self.method, self.estimates, reference, None,
                                list(self.warnings), dict(self.metadata))

    def mean_relative_error(self) -> float:
        vals = [v for v in (self.relative_errors or {}).values() if v is not None]
        return float(np.mean(vals)) if vals else math.nan

    def to_json(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"method": self.method, "estimates": self.estimates.to_dict()}
        if self.reference is not None:
            out["reference"] = self.reference.to_dict()
            out["relative_errors"] = self.relative_errors
        if self.warnings:
            out["warnings"] = list(self.warnings)
        if self.metadata:
            out["metadata"] = self.metadata
        return out

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "EstimationReport":
        kind = PoissonParams if data["method"] == "poisson" else TauMatrix
        est = kind.from_dict(data["estimates"])
        ref = kind.from_dict(data["reference"], est.n_states) if data.get("reference") else None
        return cls(data["method"], est, ref, data.get("relative_errors"),
                   list(data.get("warnings", [])), dict(data.get("metadata", {})))


def _values(params) -> Dict[Tuple[int, int], float]:
    return dict(params.tau if isinstance(params, TauMatrix) else params.mu)


def relative_errors(estimates, reference) -> Dict[str, Optional[float]]:
    """``|est - ref| / ref`` per parameter; ``None`` where undefined."""
    est, ref = _values(estimates), _values(reference)
    out: Dict[str, Optional[float]] = {}
    for key, r in ref.items():
        e = est.get(key, math.nan)
        if math.isnan(e) or math.isnan(r) or r == 0:
            out[pair_key(*key)] = None
        else:
            out[pair_key(*key)] = abs(e - r) / abs(r)
    return out


# -- couplet inversions -------------------------------------------------------

def _range_check(t01: float, t10: float, messages: Optional[List[str]] = None) -> Tuple[float, float]:
    for name, value in (("tau01", t01), ("tau10", t10)):
        if not 0.0 < value <= 1.0:
            msg = f"{name}={value:.6g} outside (0, 1]"
            warnings.warn(msg, OutOfRangeWarning, stacklevel=3)
            if messages is not None:
                messages.append(msg)
    return t01, t10


def _check_mean(mu: float):
    if mu <= 0.0 or mu >= 1.0:
        raise DegenerateError(f"mean {mu} must lie strictly inside (0, 1)")


def invert_mean_frequency(mu: float, omega: float, messages: Optional[List[str]] = None) -> Tuple[float, float]:
    _check_mean(mu)
    if not omega > 0:
        raise DomainError("frequency must be positive")
    return _range_check(omega / (1.0 - mu), omega / mu, messages)


def invert_mean_variance(mu: float, sigma2: float, v: float,
                         messages: Optional[List[str]] = None) -> Tuple[float, float]:
    _check_mean(mu)
    if not v > 0:
        raise DomainError("speed v must be positive")
    if not 0.0 < sigma2 < mu * (1.0 - mu):
        raise InfeasibleMomentsError(
            f"variance {sigma2} must lie in (0, mu(1-mu)) = (0, {mu * (1 - mu)})")
    t01 = mu * mu * v * (1.0 - mu) / sigma2 - mu * v
    t10 = v * (mu - 1.0) * (mu * mu - mu + sigma2) / sigma2
    return _range_check(t01, t10, messages)


def invert_mean_power(mu: float, S: float, v: float, verbatim: bool = False,
                      messages: Optional[List[str]] = None) -> Tuple[float, float]:
    """Recover ``(tau01, tau10)`` from the mean and the average power slope.

    The default form inverts ``S = v^4 t01 t10 / ((t01+t10)(t01+t10+v))``
    exactly. ``verbatim=True`` uses the literal denominator
    ``v^4 (mu - mu^2 - S)`` for ``tau01``, which only agrees when ``v = 1``.
    """
    _check_mean(mu)
    if not (S > 0 and v > 0):
        raise DomainError("power slope and speed must be positive")
    v4 = v ** 4
    den01 = v4 * (mu - mu * mu - S) if verbatim else v4 * (mu - mu * mu) - S
    den10 = mu * mu * v4 - mu * v4 + S
    if den01 == 0 or den10 == 0:
        raise InfeasibleMomentsError("zero denominator in power-slope inversion")
    return _range_check(mu * S * v / den01, S * v * (mu - 1.0) / den10, messages)


def measure_statistics(positions, states, traj=None) -> Dict[str, float]:
    """Mean, variance, directed 0->1 frequency and (given a trajectory) power slope."""
    m = fs.empirical_moments(positions)
    stats = {
        "mean": m.mean,
        "variance": m.variance,
        "frequency": fs.transition_frequency(states, (0, 1)),
        "frequency_10": fs.transition_frequency(states, (1, 0)),
    }
    if traj is not None:
        stats["power_slope"] = fs.cumulative_power(traj, states).slope()
    return stats


def couplet_estimate(method: str, v: float, positions=None, states=None, traj=None,
                     reference: Optional[TauMatrix] = None) -> EstimationReport:
    """Measure the statistics of a line trajectory and invert the chosen couplet."""
    if traj is not None:
        positions = traj.positions[:, 0] if positions is None else positions
        states = traj.states if states is None else states
    if positions is None or states is None:
        raise DomainError("couplet estimation needs positions and states")
    stats = measure_statistics(positions, states, traj if method == "mean_power" else None)
    notes: List[str] = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutOfRangeWarning)
        if method == "mean_frequency":
            t01, t10 = invert_mean_frequency(stats["mean"], stats["frequency"], notes)
        elif method == "mean_variance":
            t01, t10 = invert_mean_variance(stats["mean"], stats["variance"], v, notes)
        elif method == "mean_power":
            t01, t10 = invert_mean_power(stats["mean"], stats["power_slope"], v, messages=notes)
        else:
            raise ValueError(f"{method!r} is not a couplet method")
    est = TauMatrix(2, {(0, 1): min(max(t01, 0.0), 1.0), (1, 0): min(max(t10, 0.0), 1.0)})
    meta = {"statistics": stats, "raw_estimates": {"01": t01, "10": t10}}
    return EstimationReport(method, est, reference, warnings=notes, metadata=meta)


# -- likelihood ---------------------------------------------------------------

def _beta_sufficient(x: np.ndarray) -> Tuple[float, float, int]:
    return float(np.sum(np.log(x))), float(np.sum(np.log1p(-x))), int(x.size)


def _nll_from_stats(stats, t01: float, t10: float, v: float) -> float:
    slx, sl1x, n = stats
    a, b = t01 / v, t10 / v
    return -((a - 1.0) * slx + (b - 1.0) * sl1x - n * fs.log_beta_function(a, b))


def negative_log_likelihood(positions, tau01: float, tau10: float, v: float) -> float:
    """``-sum_k log Beta(x_k; tau01/v, tau10/v)``."""
    x = np.asarray(positions, dtype=float).ravel()
    if np.any((x <= 0) | (x >= 1)):
        raise DomainError("positions must lie strictly inside (0, 1)")
    if not (tau01 > 0 and tau10 > 0 and v > 0):
        raise DomainError("parameters must be positive")
    return _nll_from_stats(_beta_sufficient(x), tau01, tau10, v)


@dataclass(frozen=True)
class GridSpec:
    lo: float = 1e-4
    hi: float = 0.5
    n: int = 40
    log: bool = True
    xtol: float = 1e-6

    def axis(self) -> np.ndarray:
        if self.log:
            return np.geomspace(self.lo, self.hi, self.n)
        return np.linspace(self.lo, self.hi, self.n)


def mle_estimate(positions, v: float, search: GridSpec = GridSpec(),
                 reference: Optional[TauMatrix] = None) -> EstimationReport:
    """Grid search then Nelder-Mead on the beta negative log-likelihood.

    Samples outside ``(0, 1)`` (possible under measurement noise) are
    dropped and counted in ``metadata["excluded"]``.
    """
    x = np.asarray(positions, dtype=float).ravel()
    keep = (x > 0) & (x < 1)
    excluded = int(x.size - np.count_nonzero(keep))
    x = x[keep]
    if x.size < 2:
        raise DomainError("fewer than two usable positions")
    stats = _beta_sufficient(x)
    axis = search.axis()
    # vectorized grid evaluation; ties resolve to the lowest flat index
    A, B = np.meshgrid(axis / v, axis / v, indexing="ij")
    log_b = np.vectorize(fs.log_beta_function)(A, B)
    grid = -((A - 1.0) * stats[0] + (B - 1.0) * stats[1] - stats[2] * log_b)
    i, j = np.unravel_index(int(np.argmin(grid)), grid.shape)
    start = np.array([axis[i], axis[j]])

    def objective(p):
        if p[0] <= 0 or p[1] <= 0:
            return math.inf
        return _nll_from_stats(stats, p[0], p[1], v)

    res = minimize(objective, start, method="Nelder-Mead",
                   options={"xatol": search.xtol, "fatol": 1e-10, "maxiter": 4000,
                            "initial_simplex": [start, start * [1.1, 1.0], start * [1.0, 1.1]]})
    t01, t10 = (float(c) for c in res.x)
    notes: List[str] = []
    on_edge = i in (0, search.n - 1) or j in (0, search.n - 1)
    outside = not (search.lo <= t01 <= search.hi and search.lo <= t10 <= search.hi)
    if on_edge or outside:
        msg = f"likelihood minimum at search boundary (tau01={t01:.4g}, tau10={t10:.4g})"
        warnings.warn(msg, BoundaryWarning, stacklevel=2)
        notes.append(msg)
    est = TauMatrix(2, {(0, 1): min(t01, 1.0), (1, 0): min(t10, 1.0)})
    meta = {"nll": float(res.fun), "grid_start": [float(start[0]), float(start[1])],
            "excluded": excluded, "n_used": int(x.size), "converged": bool(res.success)}
    return EstimationReport("mle", est, reference, warnings=notes, metadata=meta)


# -- geometric state detection -------------------------------------------------

def _carry_forward(states: np.ndarray, undefined: np.ndarray) -> np.ndarray:
    """Replace undefined entries by the last defined one (state 0 before any)."""
    idx = np.where(~undefined, np.arange(len(states)), -1)
    np.maximum.accumulate(idx, out=idx)
    out = np.where(idx >= 0, states[np.maximum(idx, 0)], 0)
    return out.astype(np.int64)


def _finish(per_step: np.ndarray, n_states: int) -> StateSequence:
    full = np.empty(len(per_step) + 1, dtype=np.int64)
    full[:-1] = per_step
    full[-1] = per_step[-1] if len(per_step) else 0
    return StateSequence(full, n_states)


def detect_states_line(positions) -> StateSequence:
    """State 1 where the next position is larger, 0 where smaller; ties carry."""
    x = np.asarray(positions, dtype=float).reshape(-1)
    if x.size < 2:
        raise DomainError("need at least two positions")
    step = np.diff(x)
    raw = (step > 0).astype(np.int64)
    return _finish(_carry_forward(raw, step == 0), 2)


def _argmax_cosine(direction: np.ndarray, origin: np.ndarray, targets: PolygonTargets):
    """Index of the vertex best aligned with ``direction`` as seen from ``origin``."""
    b = targets.vertices[None, :, :] - origin[:, None, :]  # (T, n, d)
    a_norm = np.linalg.norm(direction, axis=1)
    b_norm = np.linalg.norm(b, axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.einsum("td,tnd->tn", direction, b) / (a_norm[:, None] * b_norm)
    cos = np.where(b_norm > 0, cos, -np.inf)
    return np.argmax(cos, axis=1).astype(np.int64), a_norm == 0


def detect_states_polygon(positions, targets: PolygonTargets) -> StateSequence:
    """Vertex whose direction from ``p_t`` best matches the motion ``p_{t+1} - p_t``."""
    p = np.asarray(positions, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    if len(p) < 2:
        raise DomainError("need at least two positions")
    raw, still = _argmax_cosine(np.diff(p, axis=0), p[:-1], targets)
    return _finish(_carry_forward(raw, still), targets.n_vertices)


# -- counting estimators -------------------------------------------------------

def estimate_taus_from_states(states, n_states: Optional[int] = None) -> TauMatrix:
    """``#(i -> j) / #(time steps in i with a successor)``; unvisited rows are ``nan``."""
    seq = _as_sequence(states, n_states)
    s = seq.states
    if len(s) < 2:
        raise DomainError("need at least two states")
    n = seq.n_states
    counts = np.zeros((n, n), dtype=np.int64)
    np.add.at(counts, (s[:-1], s[1:]), 1)
    occupancy = counts.sum(axis=1)
    tau = {}
    for i in range(n):
        for j in range(n):
            if i != j:
                tau[(i, j)] = counts[i, j] / occupancy[i] if occupancy[i] else math.nan
    return TauMatrix(n, tau)


def estimate_poisson_params(states, times, n_states: Optional[int] = None) -> PoissonParams:
    """Holding-time means and jump fractions, combined as ``mu_ij = mu_i / p_ij``.

    ``states``/``times`` may be an exact jump record (one entry per visit) or
    a sampled sequence; each maximal run of equal states is one visit and the
    final, censored visit is ignored.
    """
    seq = _as_sequence(states, n_states)
    s = seq.states
    t = np.asarray(times, dtype=float)
    if len(s) != len(t):
        raise DomainError("states and times differ in length")
    n = seq.n_states
    run_start = np.concatenate(([0], np.flatnonzero(np.diff(s)) + 1))
    visit_state = s[run_start]
    holding = np.diff(t[run_start])
    src, dst = visit_state[:-1], visit_state[1:]
    mu = {}
    for i in range(n):
        exits = src == i
        n_exit = int(np.count_nonzero(exits))
        mean_hold = float(holding[exits].mean()) if n_exit else math.nan
        for j in range(n):
            if i == j:
                continue
            n_ij = int(np.count_nonzero(exits & (dst == j)))
            mu[(i, j)] = mean_hold * n_exit / n_ij if n_ij else math.nan
    return PoissonParams(n, mu)


def state_detection_estimate(positions, targets: PolygonTargets,
                             reference: Optional[TauMatrix] = None) -> EstimationReport:
    if targets.dim == 1:
        seq = detect_states_line(positions)
    else:
        seq = detect_states_polygon(positions, targets)
    return EstimationReport("state_detection", estimate_taus_from_states(seq), reference)


def poisson_estimate(traj, reference: Optional[PoissonParams] = None, use_jump_record: bool = True) -> EstimationReport:
    n = traj.targets.n_vertices
    if use_jump_record and traj.jump_times is not None:
        est = estimate_poisson_params(traj.jump_states, traj.jump_times, n)
        source = "jump_record"
    else:
        est = estimate_poisson_params(traj.states, traj.times, n)
        source = "sampled"
    return EstimationReport("poisson", est, reference, metadata={"source": source})
