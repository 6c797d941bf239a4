from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DomainError
from ..estimators import StateSequence, _argmax_cosine, _carry_forward
from ..hybrid_sim import PolygonTargets


def _window_fit(block: np.ndarray):
    """Least-squares slopes against 0..m-1 and centroid; ``block`` is (..., m, d)."""
    m = block.shape[-2]
    t = np.arange(m, dtype=float) - (m - 1) / 2.0
    slope = np.einsum("m,...md->...d", t, block) / np.dot(t, t)
    return slope, block.mean(axis=-2)


def regression_state_detect(positions, targets: PolygonTargets, window: int = 1) -> StateSequence:
    """Detect states from sliding-window regression lines.

    The window at ``j`` holds samples ``j..j+W`` (truncated at the end). Its
    per-coordinate slopes give the motion direction, its centroid the origin
    of the vectors to each vertex; the state is the vertex of largest cosine.
    Windows with a single sample or zero slope carry the previous state.
    """
    p = np.asarray(positions, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    if window < 1:
        raise DomainError("window must be at least 1")
    n = len(p)
    if n < 2:
        raise DomainError("need at least two positions")
    m = min(window + 1, n)
    slopes = np.zeros_like(p)
    centres = p.copy()

    full = n - m + 1
    blocks = np.swapaxes(sliding_window_view(p, m, axis=0), -1, -2)  # (full, m, d)
    slopes[:full], centres[:full] = _window_fit(blocks)
    for j in range(full, n - 1):
        slopes[j], centres[j] = _window_fit(p[j:])
    raw, still = _argmax_cosine(slopes, centres, targets)
    still[n - 1] = True
    return StateSequence(_carry_forward(raw, still), targets.n_vertices)
