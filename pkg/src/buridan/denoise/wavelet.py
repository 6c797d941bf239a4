"""Periodized multi-level DWT with the symlet-8 filter bank and soft thresholding."""
from __future__ import annotations

import math
from typing import List, Tuple

import numpy as np

from ..errors import DomainError
from .signal import Signal1D, as_signal
from .tv import shrink

# symlet 8 decomposition lowpass (16 taps, orthonormal, 8 vanishing moments)
SYM8_DEC_LO = np.array([
    -0.0033824159510061256,
    -0.0005421323317911481,
    0.03169508781149298,
    0.007607487324917605,
    -0.1432942383508097,
    -0.061273359067658524,
    0.4813596512583722,
    0.7771857517005235,
    0.3644418948353314,
    -0.05194583810770904,
    -0.027219029917056003,
    0.049137179673607506,
    0.003808752013890615,
    -0.01495225833704823,
    -0.0003029205147213668,
    0.0018899503327594609,
])
# quadrature mirror highpass: g[n] = (-1)^(n+1) h[L-1-n]
SYM8_DEC_HI = np.array([(-1) ** (n + 1) * SYM8_DEC_LO[15 - n] for n in range(16)])

MAD_TO_SIGMA = 0.6745


def max_level(n: int, filter_len: int = SYM8_DEC_LO.size) -> int:
    if n < filter_len - 1:
        return 0
    return int(math.floor(math.log2(n / (filter_len - 1))))


def _indices(n_out: int, n_in: int, filter_len: int) -> np.ndarray:
    k = np.arange(n_out)[:, None]
    taps = np.arange(filter_len)[None, :]
    return (2 * k + filter_len // 2 - taps) % n_in


def dwt_step(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """One analysis level; odd inputs are extended by repeating the last sample."""
    if x.size % 2:
        x = np.append(x, x[-1])
    idx = _indices(x.size // 2, x.size, SYM8_DEC_LO.size)
    window = x[idx]
    return window @ SYM8_DEC_LO, window @ SYM8_DEC_HI


def idwt_step(approx: np.ndarray, detail: np.ndarray, n_out: int) -> np.ndarray:
    """Adjoint of ``dwt_step``, trimmed back to ``n_out`` samples."""
    n = 2 * approx.size
    idx = _indices(approx.size, n, SYM8_DEC_LO.size)
    out = np.zeros(n)
    np.add.at(out, idx, approx[:, None] * SYM8_DEC_LO + detail[:, None] * SYM8_DEC_HI)
    return out[:n_out]


def wavedec(x, levels: int) -> Tuple[np.ndarray, List[np.ndarray], List[int]]:
    """Approximation, details (finest first) and the input length of every level."""
    x = np.asarray(x, dtype=float)
    if levels < 1:
        raise DomainError("need at least one decomposition level")
    if x.size < 2 ** levels or levels > max_level(x.size):
        raise DomainError(
            f"{x.size} samples support at most {max_level(x.size)} sym8 levels, {levels} requested")
    details, lengths = [], []
    approx = x
    for _ in range(levels):
        lengths.append(approx.size)
        approx, d = dwt_step(approx)
        details.append(d)
    return approx, details, lengths


def waverec(approx: np.ndarray, details: List[np.ndarray], lengths: List[int]) -> np.ndarray:
    for d, n in zip(reversed(details), reversed(lengths)):
        approx = idwt_step(approx, d, n)
    return approx


def universal_threshold(finest_detail: np.ndarray, n: int) -> float:
    sigma = np.median(np.abs(finest_detail)) / MAD_TO_SIGMA
    return float(sigma * math.sqrt(2.0 * math.log(n)))


def wavelet_denoise(signal, levels: int = 6, threshold: bool = True) -> Signal1D:
    """Soft-threshold every detail level at the universal threshold, then invert."""
    sig = as_signal(signal)
    approx, details, lengths = wavedec(sig.values, levels)
    if threshold:
        thr = universal_threshold(details[0], len(sig))
        details = [shrink(d, thr) for d in details]
    return Signal1D(waverec(approx, details, lengths), sig.dt)
