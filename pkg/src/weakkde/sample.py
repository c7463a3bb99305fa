from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptySample


@dataclass(frozen=True)
class Sample:
    """Observations with provenance.

    ``points`` is 1-D for univariate data and ``(n, d)`` otherwise.
    """

    points: np.ndarray
    seed: int | None = None
    generator_id: str = "array"
    dim: int = field(init=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 2 and pts.shape[1] == 1:
            pts = pts[:, 0]
        if pts.ndim not in (1, 2):
            raise DimensionMismatch("points must be a vector or an (n, d) array")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dim", 1 if pts.ndim == 1 else pts.shape[1])

    def __len__(self):
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return len(self)

    def require(self, minimum: int = 1) -> None:
        if len(self) < max(minimum, 1):
            raise EmptySample(f"need at least {minimum} observation(s), got {len(self)}")


def as_sample(data) -> Sample:
    return data if isinstance(data, Sample) else Sample(np.asarray(data, dtype=float))
