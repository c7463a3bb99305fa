"""Bandwidth selectors and AMISE diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import DEFAULT_TAU, GAUSSIAN_PILOT, PilotSpec, estimate_curvature
from .errors import (
    DegenerateCurvature,
    DegenerateKernel,
    InsufficientSample,
    InvalidParameter,
    ZeroSpread,
)
from .estimator import kde_eval_grid
from .kernels import KernelSpec, kernel_self_convolution
from .sample import Sample, as_sample

__all__ = [
    "BandwidthResult",
    "amise_bandwidth",
    "amise_value",
    "amise_ratio",
    "robust_scale",
    "pilot_bandwidth",
    "gcpi_bandwidth",
    "silverman_bandwidth",
    "lscv_objective",
    "lscv_bandwidth",
    "default_lscv_grid",
    "multivariate_amise_bandwidth",
    "gaussian_laplacian_norm_sq",
    "SELECTORS",
]

SELECTORS = ("amise_oracle", "gcpi", "silverman", "lscv")
# Raw-data pilot bandwidth exponent: b = s_rob * n^(-1/9).
RAW_DATA_PILOT_ALPHA = 1.0 / 9.0


@dataclass(frozen=True)
class BandwidthResult:
    selector: str
    h: float
    diagnostics: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise DegenerateCurvature(f"{self.selector} produced invalid bandwidth {self.h}")


def _guard(mu2: float, curvature: float) -> None:
    if mu2 == 0:
        raise DegenerateKernel("mu2(K) = 0: higher-order kernel, no h^4 bias term")
    if not curvature > 0:
        raise DegenerateCurvature("curvature functional must be positive (f'' = 0 a.e.?)")


def amise_bandwidth(roughness: float, mu2: float, curvature: float, n: int) -> float:
    """(R(K) / (mu2^2 R(f'') n))^(1/5)."""
    _guard(mu2, curvature)
    return (roughness / (mu2 * mu2 * curvature * n)) ** 0.2


def amise_value(h: float, roughness: float, mu2: float, curvature: float, n: int) -> float:
    return 0.25 * h**4 * mu2 * mu2 * curvature + roughness / (n * h)


def amise_ratio(a: float) -> float:
    """AMISE at a * h_AMISE relative to AMISE at h_AMISE."""
    if not a > 0:
        raise InvalidParameter("bandwidth ratio must be positive")
    return (4.0 / a + a**4) / 5.0


def robust_scale(sample: Sample) -> float:
    """min(sd, IQR / 1.34) with sd using divisor n - 1."""
    x = as_sample(sample).points
    if x.size < 2:
        raise InsufficientSample("spread needs at least 2 observations")
    s = float(np.std(x, ddof=1))
    if s == 0.0:
        raise ZeroSpread("sample standard deviation is zero")
    q25, q75 = np.percentile(x, [25.0, 75.0])
    iqr = float(q75 - q25)
    # A zero IQR with positive sd would collapse the scale; fall back to sd.
    return min(s, iqr / 1.34) if iqr > 0 else s


def pilot_bandwidth(sample: Sample, alpha: float, scaled: bool) -> float:
    """n^-alpha, optionally multiplied by the robust scale of the data."""
    sample = as_sample(sample)
    b = sample.n ** (-alpha)
    return b * robust_scale(sample) if scaled else b


def gcpi_bandwidth(
    sample: Sample,
    kernel: KernelSpec,
    pilot: PilotSpec = GAUSSIAN_PILOT,
    *,
    b: float | None = None,
    alpha: float = RAW_DATA_PILOT_ALPHA,
    scaled: bool = True,
    tau: float = DEFAULT_TAU,
    workers: int = 1,
) -> BandwidthResult:
    """Plug-in bandwidth with R(f'') replaced by the truncated U-statistic.

    The pilot bandwidth is ``b`` when given, else ``n^-alpha`` (times the
    robust scale when ``scaled``).
    """
    sample = as_sample(sample)
    if sample.n < 2:
        raise InsufficientSample("GCPI needs at least 2 observations")
    if kernel.mu2 == 0:
        raise DegenerateKernel("mu2(K) = 0: GCPI is undefined for higher-order kernels")
    if b is None:
        b = pilot_bandwidth(sample, alpha, scaled)
    est = estimate_curvature(sample, b, tau, pilot, workers=workers)
    h = amise_bandwidth(kernel.roughness, kernel.mu2, est.truncated, sample.n)
    return BandwidthResult(
        "gcpi",
        h,
        {
            "curvature_raw": est.raw,
            "curvature": est.truncated,
            "pilot_bandwidth": est.pilot_bandwidth,
            "truncation_hit": float(est.truncation_hit),
        },
    )


def silverman_bandwidth(sample: Sample) -> float:
    """0.9 * min(sd, IQR/1.34) * n^(-1/5)."""
    sample = as_sample(sample)
    return 0.9 * robust_scale(sample) * sample.n ** (-0.2)


def _pair_sums(x: np.ndarray, func, h: float) -> tuple[float, float]:
    """Sum over all ordered pairs and the diagonal contribution."""
    n = x.size
    total = 0.0
    step = max(1, (1 << 21) // n)
    for s in range(0, n, step):
        total += float(func((x[s : s + step, None] - x[None, :]) / h).sum())
    diag = n * float(func(np.zeros(1))[0])
    return total, diag


def lscv_objective(sample: Sample, kernel: KernelSpec, h: float) -> float:
    """integral of f_hat^2 minus (2/n) sum_i f_hat_{-i}(X_i)."""
    x = np.sort(as_sample(sample).points)
    n = x.size
    conv = kernel_self_convolution(kernel)
    if conv is not None:
        sq, _ = _pair_sums(x, conv, h)
        int_sq = sq / (n * n * h)
    else:
        r = kernel.integration_radius()
        grid = np.linspace(x[0] - r * h, x[-1] + r * h, 8001)
        vals = kde_eval_grid(Sample(x), kernel, h, grid)
        int_sq = float(np.trapezoid(vals * vals, grid))
    total, diag = _pair_sums(x, kernel.evaluate, h)
    loo = (total - diag) / (n * (n - 1) * h)
    return int_sq - 2.0 * loo


def default_lscv_grid(sample: Sample, count: int = 200) -> np.ndarray:
    s = robust_scale(sample)
    return np.geomspace(0.05 * s, 2.0 * s, count)


def lscv_bandwidth(sample: Sample, kernel: KernelSpec, h_grid=None) -> BandwidthResult:
    """Grid minimizer of the LSCV objective; ties go to the smallest h."""
    sample = as_sample(sample)
    if sample.n < 3:
        raise InsufficientSample("LSCV needs at least 3 observations")
    grid = default_lscv_grid(sample) if h_grid is None else np.asarray(h_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0):
        raise InvalidParameter("LSCV grid must be non-empty and positive")
    scores = np.array([lscv_objective(sample, kernel, float(h)) for h in grid])
    i = int(np.argmin(scores))
    return BandwidthResult("lscv", float(grid[i]), {"objective": float(scores[i])})


def multivariate_amise_bandwidth(roughness: float, lk_norm_sq: float, d: int, n: int) -> float:
    """(d R(K) / (||L_K f||^2 n))^(1/(d+4)) for a scalar bandwidth in R^d."""
    if not lk_norm_sq > 0:
        raise DegenerateCurvature("||L_K f||^2 must be positive")
    return (d * roughness / (lk_norm_sq * n)) ** (1.0 / (d + 4))


def gaussian_laplacian_norm_sq(d: int) -> float:
    """||Laplacian f||_2^2 for the standard normal density on R^d."""
    return d * (d + 2) / (2.0 ** (d + 2) * math.pi ** (d / 2.0))
