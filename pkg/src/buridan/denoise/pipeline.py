"""Per-coordinate denoising followed by geometric state detection and counting."""
from __future__ import annotations

from typing import Any, Dict, Optional

import numpy as np

from ..errors import ConfigError
from ..estimators import EstimationReport, detect_states_polygon, estimate_taus_from_states
from ..hybrid_sim import PolygonTargets
from ..markov_core import TauMatrix
from .butterworth import ButterworthConfig, butterworth_lowpass
from .lwpr import lwpr_smooth
from .regression import regression_state_detect
from .signal import Signal1D
from .tv import TVConfig, tv_denoise
from .wavelet import wavelet_denoise

DENOISERS = ("none", "regression", "lwpr", "wavelet", "butterworth", "tv")


def _build(method: str, config: Optional[Dict[str, Any]]):
    cfg = dict(config or {})
    try:
        if method == "none":
            return lambda s: s
        if method == "lwpr":
            h, degree = cfg.pop("h", 0.005), cfg.pop("degree", 2)
            fn = lambda s: lwpr_smooth(s, h, degree)
        elif method == "wavelet":
            levels = cfg.pop("levels", 6)
            fn = lambda s: wavelet_denoise(s, levels)
        elif method == "butterworth":
            bw = ButterworthConfig(order=cfg.pop("order", 5), cutoff_bins=cfg.pop("cutoff_bins", 100.0),
                                   n_samples=cfg.pop("n_samples", None))
            fn = lambda s: butterworth_lowpass(s, bw)
        elif method == "tv":
            tv = TVConfig(gamma=cfg.pop("gamma", 0.5), lam=cfg.pop("lam", cfg.pop("lambda", 20.0)),
                          n_iters=cfg.pop("n_iters", 10), verbatim_system=cfg.pop("verbatim_system", False))
            fn = lambda s: tv_denoise(s, tv)
        else:
            raise ConfigError(f"unknown denoiser {method!r}; choose from {DENOISERS}")
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg:
        raise ConfigError(f"unused {method} options: {sorted(cfg)}")
    return fn


def denoise_positions(positions, method: str, config: Optional[Dict[str, Any]] = None) -> np.ndarray:
    """Apply the named denoiser to every coordinate independently."""
    p = np.asarray(positions, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    if method == "regression":
        raise ConfigError("regression is a detector, not a denoiser")
    fn = _build(method, config)
    cols = [fn(Signal1D(p[:, c])).values for c in range(p.shape[1])]
    return np.column_stack(cols)


def denoise_and_estimate(observations, targets: PolygonTargets, method: str,
                         config: Optional[Dict[str, Any]] = None,
                         reference: Optional[TauMatrix] = None) -> EstimationReport:
    """Denoise every coordinate, then detect states and count transitions.

    ``method="regression"`` skips denoising and detects with the windowed
    regression detector (``config={"window": W}``).
    """
    p = np.asarray(getattr(observations, "positions", observations), dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    if method == "regression":
        cfg = dict(config or {})
        window = int(cfg.pop("window", 1))
        if cfg:
            raise ConfigError(f"unused regression options: {sorted(cfg)}")
        seq = regression_state_detect(p, targets, window)
    else:
        seq = detect_states_polygon(denoise_positions(p, method, config), targets)
    est = estimate_taus_from_states(seq)
    meta = {"denoiser": method, "config": dict(config or {})}
    return EstimationReport("state_detection", est, reference, metadata=meta)
