"""Target standardization shared by both surrogate training stages."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Standardizer:
    """Affine map y -> (y - mean) / std and its inverse.

    std falls back to 1.0 for a single observation or constant targets so the
    transform stays invertible.
    """

    mean: float
    std: float

    @classmethod
    def fit(cls, y: np.ndarray) -> "Standardizer":
        y = np.asarray(y, dtype=np.float64)
        if y.size == 0:
            raise ValueError("cannot standardize an empty target vector")
        mean = float(y.mean())
        std = float(y.std()) if y.size > 1 else 1.0
        if std <= 0.0:
            std = 1.0
        return cls(mean=mean, std=std)

    def transform(self, y) -> np.ndarray:
        return (np.asarray(y, dtype=np.float64) - self.mean) / self.std

    def inverse(self, y_std) -> np.ndarray:
        return np.asarray(y_std, dtype=np.float64) * self.std + self.mean

    def inverse_scale(self, spread) -> np.ndarray:
        """De-standardize a spread quantity (no mean shift)."""
        return np.asarray(spread, dtype=np.float64) * self.std
