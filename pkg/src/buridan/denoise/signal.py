from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError


@dataclass(frozen=True)
class Signal1D:
    """Uniformly sampled scalar series."""

    values: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if vals.size < 2:
            raise DomainError("a signal needs at least two samples")
        if not np.all(np.isfinite(vals)):
            raise DomainError("signal contains non-finite values")
        if not self.dt > 0:
            raise DomainError("sample spacing must be positive")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size


def as_signal(signal, dt: float = 1.0) -> Signal1D:
    return signal if isinstance(signal, Signal1D) else Signal1D(signal, dt)
