"""Feature statistics of the line model and their closed-form predictions.

Closed forms describe the stationary regime of the two-state line: the
position density is Beta(tau01/v, tau10/v), which fixes the mean and
variance, and the same density gives the expected growth rate of the
cumulative power (integral of the squared second derivative).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import DegenerateError, DomainError

# Lanczos approximation, g = 7 with 9 coefficients.
LANCZOS_G = 7.0
LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    n_samples: Optional[int] = None


@dataclass(frozen=True)
class PowerSeries:
    times: np.ndarray
    F: np.ndarray

    def slope(self) -> float:
        """Least-squares slope of ``F`` against time."""
        if len(self.times) < 2:
            return 0.0
        t = self.times - self.times.mean()
        return float(np.dot(t, self.F - self.F.mean()) / np.dot(t, t))


def empirical_moments(positions) -> MomentSummary:
    """Sample mean and divide-by-n variance."""
    x = np.asarray(positions, dtype=float).ravel()
    if x.size < 2:
        raise DomainError("need at least two samples")
    mean = float(x.mean())
    return MomentSummary(mean, float(np.mean((x - mean) ** 2)), int(x.size))


def _check_pair(tau01: float, tau10: float):
    if tau01 < 0 or tau10 < 0:
        raise DomainError("switching probabilities must be nonnegative")
    if tau01 + tau10 == 0:
        raise DegenerateError("tau01 + tau10 = 0: no switching, statistics undefined")


def predicted_moments(tau01: float, tau10: float, v: float) -> MomentSummary:
    _check_pair(tau01, tau10)
    if not v > 0:
        raise DomainError("speed v must be positive")
    s = tau01 + tau10
    mean = tau01 / s
    var = tau01 * tau10 / (s * s * (tau01 / v + tau10 / v + 1.0))
    return MomentSummary(mean, var)


def transition_frequency(states, transition: Optional[Tuple[int, int]] = None) -> float:
    """Fraction of unit steps on which the state changes.

    With ``transition=(i, j)`` only ``i -> j`` changes are counted; for the
    two-state chain the directed ``(0, 1)`` count estimates the frequency
    ``tau01 tau10 / (tau01 + tau10)``.
    """
    s = np.asarray(states)
    if s.size < 2:
        raise DomainError("need at least two states")
    a, b = s[:-1], s[1:]
    if transition is None:
        hits = np.count_nonzero(a != b)
    else:
        hits = np.count_nonzero((a == transition[0]) & (b == transition[1]))
    return hits / (s.size - 1)


def predicted_frequency(tau01: float, tau10: float) -> float:
    _check_pair(tau01, tau10)
    return tau01 * tau10 / (tau01 + tau10)


def _segments(traj, states):
    """Exact piecewise description of the path: start time, duration, start point, goal."""
    goals = traj.targets.vertices
    if traj.jump_times is None:
        t = np.asarray(traj.times, dtype=float)
        return t[:-1], np.diff(t), np.asarray(traj.positions)[:-1], goals[np.asarray(states)[:-1]]
    # continuous-time record: cut the path at every sample time and every jump
    horizon = float(traj.times[-1])
    jumps = np.asarray(traj.jump_times)
    jump_states = np.asarray(traj.jump_states)
    cuts = np.union1d(np.asarray(traj.times, dtype=float), jumps[jumps <= horizon])
    owner = np.searchsorted(jumps, cuts[:-1], side="right") - 1
    seg_goal = goals[jump_states[owner]]
    dt = np.diff(cuts)
    starts = np.empty((len(cuts) - 1, traj.positions.shape[1]))
    p = np.asarray(traj.positions[0], dtype=float)
    decay = np.exp(-traj.v * dt)
    for k in range(len(dt)):
        starts[k] = p
        p = seg_goal[k] + (p - seg_goal[k]) * decay[k]
    return cuts[:-1], dt, starts, seg_goal


def cumulative_power(traj, states=None) -> PowerSeries:
    """Cumulative power ``F(t)`` at the sample times, integrated exactly per segment.

    On a segment of length ``d`` heading to ``g`` from ``p``, the squared
    acceleration is ``v**4 |p(s) - g|**2`` and integrates to
    ``v**3 |p - g|**2 (1 - exp(-2 v d)) / 2``. Switch instants contribute
    nothing. ``states`` overrides the trajectory's own labels (e.g. detected
    states).
    """
    if states is None:
        states = getattr(traj, "states", None)
    if states is None:
        raise DomainError("cumulative power needs state labels")
    times = np.asarray(traj.times, dtype=float)
    if len(times) < 2:
        return PowerSeries(times, np.zeros(len(times)))
    v = float(traj.v)
    t0, dt, start, goal = _segments(traj, states)
    contrib = v ** 3 * np.sum((start - goal) ** 2, axis=1) * (-np.expm1(-2.0 * v * dt)) / 2.0
    F_cuts = np.concatenate(([0.0], np.cumsum(contrib)))
    cut_times = np.concatenate((t0, [t0[-1] + dt[-1]]))
    idx = np.searchsorted(cut_times, times)
    return PowerSeries(times, F_cuts[idx])


def predicted_power_slope(tau01: float, tau10: float, v: float) -> float:
    _check_pair(tau01, tau10)
    if not v > 0:
        raise DomainError("speed v must be positive")
    s = tau01 + tau10
    return v ** 4 * tau01 * tau10 / (s * (s + v))


def _lanczos_sum(z: float) -> float:
    acc = LANCZOS_COEFFS[0]
    for i, c in enumerate(LANCZOS_COEFFS[1:]):
        acc += c / (z + i)
    return acc


def log_gamma(x: float) -> float:
    """``ln Gamma(x)`` for ``x > 0`` via the Lanczos series, reflected below 1/2."""
    if not x > 0:
        raise DomainError("log_gamma defined here for x > 0 only")
    if x < 0.5:
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    t = x + LANCZOS_G - 0.5
    return _HALF_LOG_2PI + (x - 0.5) * math.log(t) - t + math.log(_lanczos_sum(x))


def _log_gamma_ratio(a: float, b: float) -> float:
    """``ln Gamma(a) - ln Gamma(a + b)`` for ``a >= 1/2``, without cancellation."""
    ta = a + LANCZOS_G - 0.5
    tab = ta + b
    return (-(a - 0.5) * math.log1p(b / ta) - b * math.log(tab) + b
            + math.log(_lanczos_sum(a) / _lanczos_sum(a + b)))


def log_beta_function(a: float, b: float) -> float:
    if not (a > 0 and b > 0):
        raise DomainError("beta parameters must be positive")
    big, small = (a, b) if a >= b else (b, a)
    if big < 0.5:
        return log_gamma(a) + log_gamma(b) - log_gamma(a + b)
    return _log_gamma_ratio(big, small) + log_gamma(small)


def log_beta_density(x, a: float, b: float):
    """Log density of Beta(a, b); vectorized over ``x``."""
    if not (a > 0 and b > 0):
        raise DomainError("beta parameters must be positive")
    arr = np.asarray(x, dtype=float)
    if np.any((arr <= 0) | (arr >= 1)):
        raise DomainError("beta density evaluated outside (0, 1)")
    out = (a - 1.0) * np.log(arr) + (b - 1.0) * np.log1p(-arr) - log_beta_function(a, b)
    return float(out) if np.ndim(out) == 0 else out
