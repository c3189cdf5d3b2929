"""Points of the Heisenberg group ``C^n x R``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class HPoint:
    z: tuple
    t: float

    def __post_init__(self):
        z = tuple(complex(c) for c in np.atleast_1d(np.asarray(self.z, dtype=complex)))
        if not z:
            raise ValidationError("a Heisenberg point needs n >= 1 complex coordinates")
        if not all(np.isfinite(c.real) and np.isfinite(c.imag) for c in z) or not np.isfinite(self.t):
            raise ValidationError("point coordinates must be finite")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return len(self.z)

    def to_real(self) -> np.ndarray:
        """``(x_1..x_n, y_1..y_n, t)``."""
        z = np.asarray(self.z)
        return np.concatenate([z.real, z.imag, [self.t]])

    @classmethod
    def from_real(cls, coords) -> "HPoint":
        c = np.asarray(coords, dtype=float).reshape(-1)
        if c.size % 2 != 1:
            raise ValidationError("real coordinates must have odd length 2n+1")
        n = c.size // 2
        return cls(c[:n] + 1j * c[n : 2 * n], c[-1])

    def to_dict(self) -> dict:
        return {"z": [[c.real, c.imag] for c in self.z], "t": self.t}


def as_points(points, n: int) -> np.ndarray:
    """Coerce an HPoint, a sequence of them or a real array to shape ``(N, 2n+1)``."""
    if isinstance(points, HPoint):
        points = [points]
    if isinstance(points, (list, tuple)) and points and isinstance(points[0], HPoint):
        arr = np.array([p.to_real() for p in points])
    else:
        arr = np.atleast_2d(np.asarray(points, dtype=float))
    if arr.shape[-1] != 2 * n + 1:
        raise ValidationError(f"points must have 2n+1={2 * n + 1} real coordinates, got shape {arr.shape}")
    return arr


def sample_points(n: int, count: int, seed: int, scale: float = 1.0) -> np.ndarray:
    """Reproducible Gaussian sample set of shape ``(count, 2n+1)``."""
    rng = np.random.default_rng(seed)
    return scale * rng.standard_normal((count, 2 * n + 1))
