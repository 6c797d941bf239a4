import numpy as np

from .signal import as_signal


def dft_magnitude(signal) -> np.ndarray:
    """``|F(w)|`` with ``F(w) = sum_k x_k exp(-2 pi i w k / M)`` for ``w = 0..M-1``, ``M`` samples."""
    return np.abs(np.fft.fft(as_signal(signal).values))
