"""Locally weighted polynomial regression (loess-style smoother).

Every sample is replaced by the value at that sample of a polynomial fitted
by weighted least squares to its ``ceil(h * N)`` nearest neighbours, with
tricube weights ``(1 - (d / d_max)**3)**3``. Near the ends the window is
shifted inward rather than shrunk.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DomainError
from .signal import Signal1D, as_signal


def _fit_weights(offsets: np.ndarray, degree: int) -> np.ndarray:
    """Linear functional mapping window values to the fitted value at offset 0."""
    dist = np.abs(offsets).astype(float)
    w = (1.0 - (dist / dist.max()) ** 3) ** 3
    X = np.vander(offsets.astype(float), degree + 1, increasing=True)
    sw = np.sqrt(w)[:, None]
    # fitted value at 0 is the intercept: e0' (X'WX)^+ X'W
    pinv = np.linalg.pinv(sw * X)
    return pinv[0] * sw[:, 0]


def lwpr_smooth(signal, h: float = 0.005, degree: int = 2) -> Signal1D:
    sig = as_signal(signal)
    n = len(sig)
    if not 0 < h <= 1:
        raise DomainError("smoothing fraction h must lie in (0, 1]")
    if degree < 0:
        raise DomainError("degree must be nonnegative")
    k = min(n, math.ceil(h * n))
    if k < degree + 1:
        raise DomainError(f"window of {k} samples too small for degree {degree}")
    if k < 2:
        return Signal1D(sig.values.copy(), sig.dt)

    idx = np.arange(n)
    start = np.clip(idx - (k - 1) // 2, 0, n - k)
    shift = start - idx  # window offset pattern, constant away from the ends
    windows = sliding_window_view(sig.values, k)
    out = np.empty(n)
    for s in np.unique(shift):
        rows = np.flatnonzero(shift == s)
        coeffs = _fit_weights(np.arange(k) + s, degree)
        out[rows] = windows[start[rows]] @ coeffs
    return Signal1D(out, sig.dt)
