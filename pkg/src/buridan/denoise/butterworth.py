"""Digital Butterworth lowpass built from the analog prototype.

Analog poles sit evenly on the left half of a circle of radius equal to the
pre-warped cutoff; the bilinear map ``s = (z - 1)/(z + 1)`` takes each
conjugate pair (and the real pole of an odd order) to one second-order
section with both zeros at ``z = -1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import sosfilt

from ..errors import DomainError
from .signal import Signal1D, as_signal


@dataclass(frozen=True)
class ButterworthConfig:
    order: int = 5
    cutoff_bins: float = 100.0
    n_samples: Optional[int] = None  # defaults to the signal length

    def normalized_cutoff(self, n_samples: Optional[int] = None) -> float:
        """Cutoff as a fraction of Nyquist: ``cutoff_bins / (n_samples / 2)``."""
        n = self.n_samples or n_samples
        if n is None:
            raise DomainError("number of samples unknown")
        if self.order < 1 or not self.cutoff_bins > 0:
            raise DomainError("order and cutoff must be positive")
        if not self.cutoff_bins < n / 2:
            raise DomainError(f"cutoff {self.cutoff_bins} bins is not below Nyquist ({n / 2})")
        return self.cutoff_bins / (n / 2)


def butterworth_sos(order: int, wn: float) -> np.ndarray:
    """Second-order sections ``[b0, b1, b2, 1, a1, a2]`` of the lowpass, cutoff ``wn`` of Nyquist."""
    if order < 1:
        raise DomainError("filter order must be positive")
    if not 0 < wn < 1:
        raise DomainError("normalized cutoff must lie in (0, 1)")
    warped = math.tan(math.pi * wn / 2.0)
    sections = []
    for k in range(order // 2):
        pole = warped * np.exp(1j * math.pi * (2 * k + order + 1) / (2 * order))
        re, mag2 = pole.real, abs(pole) ** 2
        a = np.array([1 - 2 * re + mag2, -2 + 2 * mag2, 1 + 2 * re + mag2])
        b = np.array([1.0, 2.0, 1.0])
        sections.append((b, a))
    if order % 2:
        a = np.array([1 + warped, warped - 1, 0.0])
        b = np.array([1.0, 1.0, 0.0])
        sections.append((b, a))
    sos = []
    for b, a in sections:
        a = a / a[0]
        b = b * (a.sum() / b.sum())  # unity gain at z = 1
        sos.append(np.concatenate((b, a)))
    return np.array(sos)


def section_poles(sos: np.ndarray) -> np.ndarray:
    poles = []
    for row in sos:
        a = row[3:]
        poles.extend(np.roots(a[: 3 if a[2] != 0 else 2]))
    return np.array(poles)


def steady_state(sos: np.ndarray, level: float) -> np.ndarray:
    """Transposed direct-form II state that holds a constant input ``level`` steady."""
    zi = np.empty((len(sos), 2))
    for k, (b0, b1, b2, _, a1, a2) in enumerate(sos):
        zi[k, 1] = level * (b2 - a2)
        zi[k, 0] = level * (b1 - a1) + zi[k, 1]
    return zi


def butterworth_lowpass(signal, config: ButterworthConfig = ButterworthConfig()) -> Signal1D:
    """Single causal pass, state initialized as if the first sample had always been present."""
    sig = as_signal(signal)
    sos = butterworth_sos(config.order, config.normalized_cutoff(len(sig)))
    out = sosfilt(sos, sig.values, zi=steady_state(sos, sig.values[0]))[0]
    return Signal1D(out, sig.dt)
