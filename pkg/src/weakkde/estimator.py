"""Kernel density estimator with a scalar bandwidth and its exact expectation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .densities import DensityModel
from .errors import DimensionMismatch, InvalidParameter
from .kernels import KernelSpec
from .quadrature import piecewise_nodes, simpson_split
from .sample import Sample, as_sample

__all__ = [
    "EvaluationGrid",
    "kde_eval",
    "kde_eval_grid",
    "kde_eval_tensor_grid",
    "kde_expectation",
    "kde_expectation_grid",
    "count_modes",
]

_PRODUCT_KERNELS = ("gaussian", "epanechnikov")
_CHUNK = 1 << 22


@dataclass(frozen=True)
class EvaluationGrid:
    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidParameter("grid needs lo < hi")
        if self.count < 2:
            raise InvalidParameter("grid needs at least 2 points")

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.count - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)

    @classmethod
    def parse(cls, text: str) -> "EvaluationGrid":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise InvalidParameter(f"grid must be 'lo,hi,count', got {text!r}")
        try:
            return cls(float(parts[0]), float(parts[1]), int(parts[2]))
        except ValueError:
            raise InvalidParameter(f"grid must be 'lo,hi,count', got {text!r}") from None


def _check_h(h: float) -> float:
    h = float(h)
    if not (h > 0 and math.isfinite(h)):
        raise InvalidParameter(f"bandwidth must be positive and finite, got {h}")
    return h


def kde_eval(sample: Sample, kernel: KernelSpec, h: float, x) -> float:
    """(1 / (n h^d)) sum_i K((x - X_i) / h) at a single point ``x``.

    For d >= 2 the kernel is used in product form over coordinates.
    """
    sample = as_sample(sample)
    sample.require(1)
    h = _check_h(h)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (sample.dim,):
        raise DimensionMismatch(f"point has shape {x.shape}, sample dimension is {sample.dim}")
    if sample.dim == 1:
        return float(np.sum(kernel.evaluate((x[0] - sample.points) / h)) / (sample.n * h))
    if kernel.name not in _PRODUCT_KERNELS:
        raise InvalidParameter(f"no product form for kernel {kernel.name!r} in d >= 2")
    weights = np.prod(kernel.evaluate((x[None, :] - sample.points) / h), axis=1)
    return float(np.sum(weights) / (sample.n * h**sample.dim))


def kde_eval_grid(sample: Sample, kernel: KernelSpec, h: float, grid) -> np.ndarray:
    """Univariate KDE on every point of ``grid`` (EvaluationGrid or array)."""
    sample = as_sample(sample)
    sample.require(1)
    if sample.dim != 1:
        raise DimensionMismatch("kde_eval_grid is univariate")
    h = _check_h(h)
    xs = grid.points if isinstance(grid, EvaluationGrid) else np.asarray(grid, dtype=float)
    data = sample.points
    out = np.empty(xs.shape[0])
    step = max(1, _CHUNK // max(data.size, 1))
    for start in range(0, xs.shape[0], step):
        block = xs[start : start + step]
        out[start : start + step] = np.sum(kernel.evaluate((block[:, None] - data[None, :]) / h), axis=1)
    return out / (data.size * h)


def kde_eval_tensor_grid(sample: Sample, kernel: KernelSpec, h: float, axes) -> np.ndarray:
    """Product-kernel KDE on the tensor grid spanned by ``axes`` (one array per dim)."""
    sample = as_sample(sample)
    sample.require(1)
    h = _check_h(h)
    if len(axes) != sample.dim:
        raise DimensionMismatch("need one axis per dimension")
    if sample.dim > 1 and kernel.name not in _PRODUCT_KERNELS:
        raise InvalidParameter(f"no product form for kernel {kernel.name!r} in d >= 2")
    pts = sample.points.reshape(sample.n, -1)
    factors = [kernel.evaluate((np.asarray(ax)[None, :] - pts[:, [j]]) / h) for j, ax in enumerate(axes)]
    if sample.dim == 1:
        dens = factors[0].sum(axis=0)
    elif sample.dim == 2:
        dens = factors[0].T @ factors[1]
    else:
        raise DimensionMismatch("tensor-grid evaluation supports d <= 2")
    return dens / (sample.n * h**sample.dim)


def kde_expectation(
    model: DensityModel, kernel: KernelSpec, h: float, x: float, points: int = 4001
) -> float:
    """E f_hat_h(x) = integral of K(u) f(x - h u) du by kink-split Simpson."""
    h = _check_h(h)
    radius = kernel.integration_radius() if kernel.compact else 12.0
    # x - h u crosses kink k at u = (x - k) / h.
    breaks = [(x - k) / h for k in model.kink_points]
    return simpson_split(
        lambda u: kernel.evaluate(u) * model.pdf(x - h * u), -radius, radius, breaks, points
    )


def kde_expectation_grid(
    model: DensityModel, kernel: KernelSpec, h: float, xs, points: int = 4001
) -> np.ndarray:
    """Vectorized :func:`kde_expectation`; windows free of kinks share one node set."""
    h = _check_h(h)
    xs = np.asarray(xs, dtype=float)
    radius = kernel.integration_radius() if kernel.compact else 12.0
    out = np.empty(xs.shape)
    touched = np.zeros(xs.shape, dtype=bool)
    for k in model.kink_points:
        touched |= np.abs(xs - k) < radius * h
    (u,) = piecewise_nodes(-radius, radius, (), points)
    ku = kernel.evaluate(u)
    free = np.flatnonzero(~touched)
    step = max(1, _CHUNK // u.size)
    for start in range(0, free.size, step):
        idx = free[start : start + step]
        vals = ku[None, :] * model.pdf(xs[idx, None] - h * u[None, :])
        out[idx] = simpson(vals, x=u, axis=1)
    for i in np.flatnonzero(touched):
        out[i] = kde_expectation(model, kernel, h, float(xs[i]), points)
    return out


def count_modes(values: np.ndarray, rel_prominence: float = 1e-3) -> int:
    """Best-effort count of local maxima on a grid.

    A maximum counts once the curve has dropped below it by ``rel_prominence``
    times the global maximum, and the next one needs an equal rise first.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3 or not np.any(v > 0):
        return 0
    delta = rel_prominence * float(np.max(v))
    lo, hi = math.inf, -math.inf
    rising = True
    modes = 0
    for y in v:
        hi = max(hi, y)
        lo = min(lo, y)
        if rising and y < hi - delta:
            modes += 1
            lo, rising = y, False
        elif not rising and y > lo + delta:
            hi, rising = y, True
    return modes
