"""Simulation of stochastically switching contraction dynamics.

In state ``i`` the position relaxes toward target vertex ``g_i`` at rate
``v``: ``dp/dt = v (g_i - p)``. The flow is linear, so every update here is
the exact solution ``p(t+s) = g_i + (p(t) - g_i) exp(-v s)`` rather than a
numerical integration step.

Random stream layout
--------------------
Each call owns one ``numpy.random.Generator`` (PCG64) seeded from its integer
``seed``; independent replicates use distinct seeds.

* ``simulate_line`` / ``simulate_polygon`` draw one block of ``n_steps``
  uniforms up front; uniform ``t`` decides the switch made after the move
  from time ``t`` to ``t + 1``.
* ``simulate_poisson`` draws, at every visit, one exponential per possible
  destination in increasing destination order.
* ``add_noise`` draws a ``(len(times), dim)`` block of standard normals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from .errors import DomainError, InvalidParametersError
from .markov_core import Pair, TauMatrix, pair_key, parse_pair_key

DISCRETE = "discrete-markov"
POISSON = "poisson"


@dataclass(frozen=True)
class PolygonTargets:
    """Attracting vertices; state ``i`` moves toward ``vertices[i]``.

    One-dimensional targets (the line model) have shape ``(n, 1)``.
    """

    vertices: np.ndarray

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim == 1:
            verts = verts.reshape(-1, 1)
        verts = verts.copy()
        if verts.shape[0] < 2:
            raise InvalidParametersError("need at least two target vertices")
        if verts.shape[1] not in (1, 2):
            raise InvalidParametersError("targets must be 1-D or 2-D points")
        if len({tuple(v) for v in verts}) != len(verts):
            raise InvalidParametersError("duplicate target vertices")
        if verts.shape[1] == 1 and len(verts) != 2:
            raise InvalidParametersError("a line has exactly two targets")
        if verts.shape[1] == 2:
            if len(verts) == 2:
                raise InvalidParametersError("two planar targets span no interior")
            _ccw_order(verts)
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def line(cls) -> "PolygonTargets":
        return cls(np.array([[0.0], [1.0]]))

    @classmethod
    def triangle(cls) -> "PolygonTargets":
        return cls(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def contains_strictly(self, points) -> np.ndarray:
        """Boolean mask of points strictly inside the open convex hull."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.dim == 1:
            lo, hi = self.vertices.min(), self.vertices.max()
            return (pts[:, 0] > lo) & (pts[:, 0] < hi)
        ring = self.vertices[_ccw_order(self.vertices)]
        inside = np.ones(len(pts), dtype=bool)
        for a, b in zip(ring, np.roll(ring, -1, axis=0)):
            edge = b - a
            rel = pts - a
            inside &= edge[0] * rel[:, 1] - edge[1] * rel[:, 0] > 0
        return inside


def _ccw_order(verts: np.ndarray) -> np.ndarray:
    centre = verts.mean(axis=0)
    order = np.argsort(np.arctan2(verts[:, 1] - centre[1], verts[:, 0] - centre[0]))
    ring = verts[order]
    for a, b, c in zip(ring, np.roll(ring, -1, axis=0), np.roll(ring, -2, axis=0)):
        cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if cross <= 0:
            raise InvalidParametersError("target vertices are not in strictly convex position")
    return order


@dataclass(frozen=True)
class PoissonParams:
    """Mean waiting times ``mu[(i, j)]`` of competing exponential clocks."""

    n_states: int
    mu: Mapping[Pair, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_states < 2:
            raise InvalidParametersError("need at least two states")
        clean = {}
        for (i, j), value in dict(self.mu).items():
            if i == j or not (0 <= i < self.n_states and 0 <= j < self.n_states):
                raise InvalidParametersError(f"invalid transition index ({i}, {j})")
            value = float(value)
            if not math.isnan(value) and not 0.0 < value < math.inf:
                raise InvalidParametersError(f"mu_{i}{j}={value} must satisfy 0 < mu < inf")
            clean[(i, j)] = value
        object.__setattr__(self, "mu", dict(sorted(clean.items())))

    def destinations(self, i: int):
        return [j for j in range(self.n_states) if (i, j) in self.mu and not math.isnan(self.mu[(i, j)])]

    def mean_holding_time(self, i: int) -> float:
        """``(sum_j 1/mu_ij)**-1``: the minimum of the competing clocks is exponential with this mean."""
        rates = [1.0 / self.mu[(i, j)] for j in self.destinations(i)]
        return 1.0 / sum(rates) if rates else math.inf

    def jump_probability(self, i: int, j: int) -> float:
        """Probability that the clock toward ``j`` fires first: ``mu_i / mu_ij``."""
        return self.mean_holding_time(i) / self.mu[(i, j)]

    def to_dict(self) -> Dict[str, Optional[float]]:
        return {pair_key(i, j): (None if math.isnan(v) else v) for (i, j), v in self.mu.items()}

    @classmethod
    def from_dict(cls, values: Mapping[str, Optional[float]], n_states: Optional[int] = None) -> "PoissonParams":
        parsed = {parse_pair_key(k): (math.nan if v is None else float(v)) for k, v in values.items()}
        if n_states is None:
            n_states = 1 + max(max(p) for p in parsed)
        return cls(n_states, parsed)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    positions: np.ndarray  # (T, d)
    states: np.ndarray  # states[t] drives the motion on [times[t], times[t+1])
    v: float
    targets: PolygonTargets
    model: str = DISCRETE
    # poisson model only: exact switch record, jump_states[k] entered at jump_times[k]
    jump_times: Optional[np.ndarray] = None
    jump_states: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.times)

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class ObservationSeries:
    times: np.ndarray
    positions: np.ndarray  # (T, d)

    def __len__(self):
        return len(self.times)

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


def _keep_off_target(values: np.ndarray, start: np.ndarray, target: np.ndarray) -> np.ndarray:
    # Exact arithmetic never reaches the target; floating point does once the
    # remaining distance drops below one ulp. Step back to the nearest float.
    hit = (values == target) & (start != target)
    if hit.any():
        values = np.where(hit, np.nextafter(target, start), values)
    return values


def _switch_thresholds(tau: TauMatrix):
    """Per state: destination list and cumulative switch thresholds."""
    table = []
    for i in range(tau.n_states):
        dests = [j for j in range(tau.n_states) if j != i]
        table.append((np.array(dests), np.cumsum([tau[(i, j)] for j in dests])))
    return table


def simulate_states(tau: TauMatrix, n_steps: int, rng: np.random.Generator, initial_state: int = 0) -> np.ndarray:
    """Discrete-time chain of length ``n_steps + 1`` using one uniform per step.

    After the move at step ``t`` the chain in state ``i`` jumps to the
    ``k``-th destination ``j`` (in increasing order) when ``u[t]`` falls in
    ``[c_{k-1}, c_k)`` with ``c`` the cumulative ``tau_ij``; it stays otherwise.
    """
    if tau.has_missing:
        raise InvalidParametersError("cannot simulate with missing switching probabilities")
    u = rng.random(n_steps)
    table = _switch_thresholds(tau)
    # jump index (or -1 for stay) at every step, per current state
    switch_steps = []
    jump_to = []
    for dests, cum in table:
        k = np.searchsorted(cum, u, side="right")
        moves = k < len(dests)
        switch_steps.append(np.flatnonzero(moves))
        jump_to.append(dests[np.minimum(k, len(dests) - 1)])
    states = np.empty(n_steps + 1, dtype=np.int64)
    t = 0
    s = int(initial_state)
    while t < n_steps:
        candidates = switch_steps[s]
        idx = np.searchsorted(candidates, t)
        if idx == len(candidates):
            states[t:] = s
            return states
        nxt = int(candidates[idx])
        states[t:nxt + 1] = s
        s = int(jump_to[s][nxt])
        t = nxt + 1
    states[n_steps] = s
    return states


def _integrate_unit_steps(states: np.ndarray, p0: np.ndarray, targets: PolygonTargets, v: float) -> np.ndarray:
    n = len(states)
    drive = states[:-1]
    change = np.flatnonzero(np.diff(drive)) + 1
    starts = np.concatenate(([0], change)).astype(np.int64)
    lengths = np.diff(np.concatenate((starts, [n - 1])))

    # segment start points, chained sequentially
    goals = targets.vertices[drive[starts]] if n > 1 else targets.vertices[states[:1]]
    decay = np.exp(-v * lengths.astype(float))
    seg_start = []
    p = [float(c) for c in p0]
    for g, f in zip(goals.tolist(), decay.tolist()):
        seg_start.append(p)
        nxt = []
        for pc, gc in zip(p, g):
            c = gc + (pc - gc) * f
            nxt.append(math.nextafter(gc, pc) if c == gc and pc != gc else c)
        p = nxt
    seg_start = np.array(seg_start, dtype=float).reshape(len(starts), targets.dim)

    positions = np.empty((n, targets.dim))
    if n > 1:
        seg_of = np.repeat(np.arange(len(starts)), lengths)
        k = np.arange(n - 1) - starts[seg_of] + 1
        g = goals[seg_of]
        origin = seg_start[seg_of]
        positions[1:] = _keep_off_target(g + (origin - g) * np.exp(-v * k)[:, None], origin, g)
        positions[starts[1:]] = seg_start[1:]
    positions[0] = p0
    return positions


def _check_common(v: float, n_steps: int):
    if not v > 0:
        raise DomainError("speed v must be positive")
    if n_steps < 0:
        raise DomainError("n_steps must be nonnegative")


def simulate_line(tau: TauMatrix, v: float = 0.1, x0: float = 0.5, n_steps: int = 10_000,
                  seed: int = 0, initial_state: int = 0) -> Trajectory:
    """Two-state walker on ``(0, 1)``; state 0 heads to 0, state 1 heads to 1."""
    if tau.n_states != 2:
        raise InvalidParametersError("line model has exactly two states")
    if not 0.0 < x0 < 1.0:
        raise DomainError(f"x0={x0} must lie strictly inside (0, 1)")
    return simulate_polygon(tau, PolygonTargets.line(), v=v, p0=[x0], n_steps=n_steps,
                            seed=seed, initial_state=initial_state)


def simulate_polygon(tau: TauMatrix, targets: Optional[PolygonTargets] = None, v: float = 0.01,
                     p0: Optional[Sequence[float]] = None, n_steps: int = 10_000, seed: int = 0,
                     initial_state: int = 0) -> Trajectory:
    """Unit-step switching among the vertices of a convex polygon.

    Defaults reproduce the triangle ``(0,0), (1,0), (0,1)`` started at
    ``(1/3, 1/3)`` in state 0.
    """
    targets = targets or PolygonTargets.triangle()
    _check_common(v, n_steps)
    if tau.n_states != targets.n_vertices:
        raise InvalidParametersError("number of states must equal number of targets")
    if p0 is None:
        p0 = targets.vertices.mean(axis=0)
    p0 = np.asarray(p0, dtype=float).reshape(targets.dim)
    if not targets.contains_strictly(p0)[0]:
        raise DomainError(f"start point {p0} is not strictly inside the target hull")
    if not 0 <= initial_state < tau.n_states:
        raise DomainError("initial state out of range")
    rng = np.random.default_rng(seed)
    states = simulate_states(tau, n_steps, rng, initial_state)
    positions = _integrate_unit_steps(states, p0, targets, v)
    times = np.arange(n_steps + 1, dtype=float)
    return Trajectory(times, positions, states, float(v), targets, DISCRETE)


def simulate_poisson(params: PoissonParams, targets: Optional[PolygonTargets] = None, v: float = 0.01,
                     p0: Optional[Sequence[float]] = None, horizon: float = 10_000.0,
                     sample_dt: float = 1.0, seed: int = 0, initial_state: int = 0) -> Trajectory:
    """Continuous-time switching driven by competing exponential clocks.

    Every visit to state ``i`` starts one clock per destination ``j`` with mean
    ``mu_ij``; the earliest clock fires. Positions are exact between events
    and reported on the grid ``0, sample_dt, 2*sample_dt, ... <= horizon``.
    """
    if targets is None:
        targets = PolygonTargets.line() if params.n_states == 2 else PolygonTargets.triangle()
    if not horizon > 0 or not sample_dt > 0:
        raise DomainError("horizon and sample_dt must be positive")
    if not v > 0:
        raise DomainError("speed v must be positive")
    if params.n_states != targets.n_vertices:
        raise InvalidParametersError("number of states must equal number of targets")
    if p0 is None:
        p0 = [0.5] if targets.dim == 1 else targets.vertices.mean(axis=0)
    p = np.asarray(p0, dtype=float).reshape(targets.dim)
    if not targets.contains_strictly(p)[0]:
        raise DomainError(f"start point {p} is not strictly inside the target hull")
    rng = np.random.default_rng(seed)

    grid = np.arange(int(math.floor(horizon / sample_dt + 1e-9)) + 1) * sample_dt
    positions = np.empty((len(grid), targets.dim))
    states = np.empty(len(grid), dtype=np.int64)
    jump_times = [0.0]
    jump_states = [int(initial_state)]

    s = int(initial_state)
    t = 0.0
    k = 0
    dest_cache = {i: params.destinations(i) for i in range(params.n_states)}
    means_cache = {i: np.array([params.mu[(i, j)] for j in dest_cache[i]]) for i in dest_cache}
    while k < len(grid):
        dests = dest_cache[s]
        if dests:
            waits = rng.exponential(means_cache[s])
            w = int(np.argmin(waits))
            t_next = t + float(waits[w])
        else:
            t_next = math.inf
        g = targets.vertices[s]
        stop = np.searchsorted(grid, t_next, side="left")
        if stop > k:
            dt = grid[k:stop] - t
            seg = g + (p - g) * np.exp(-v * dt)[:, None]
            positions[k:stop] = _keep_off_target(seg, p, g)
            states[k:stop] = s
            k = stop
        if t_next == math.inf:
            break
        p = _keep_off_target(g + (p - g) * math.exp(-v * (t_next - t)), p, g)
        t = t_next
        s = dests[w]
        jump_times.append(t)
        jump_states.append(s)
    return Trajectory(grid, positions, states, float(v), targets, POISSON,
                      np.asarray(jump_times), np.asarray(jump_states, dtype=np.int64))


def add_noise(traj, sigma: float, seed: int = 0) -> ObservationSeries:
    """Positions plus i.i.d. ``N(0, sigma**2)`` per coordinate and time; states are dropped."""
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(traj.positions.shape) * sigma
    return ObservationSeries(np.array(traj.times, dtype=float), traj.positions + noise)


def observe(traj: Trajectory) -> ObservationSeries:
    """Noise-free estimator-facing view of a trajectory."""
    return ObservationSeries(np.array(traj.times, dtype=float), np.array(traj.positions))
