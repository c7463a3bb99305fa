"""Integrated risks, bias/variance bounds and the Monte Carlo risk harness.

Replication ``r`` at sample size ``n`` draws its data from a seed derived
from ``(master_seed, n, r)`` only, so every kernel and selector in a run is
evaluated on the same samples and the output does not depend on how
replications are scheduled across workers.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bandwidth import (
    amise_bandwidth,
    gaussian_laplacian_norm_sq,
    gcpi_bandwidth,
    lscv_bandwidth,
    multivariate_amise_bandwidth,
    silverman_bandwidth,
)
from .curvature import DEFAULT_TAU
from .densities import DensityModel, local_curvature_bound, parse_density
from .errors import ConfigError, InsufficientPoints, LengthMismatch, WeakKDEError
from .estimator import (
    EvaluationGrid,
    kde_eval_grid,
    kde_eval_tensor_grid,
    kde_expectation,
    kde_expectation_grid,
)
from .kernels import KernelSpec, get_kernel
from .sample import Sample

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "ise",
    "integrated_variance",
    "integrated_squared_bias",
    "mise_upper_bound",
    "pointwise_bias_bound",
    "local_bias_bound",
    "replication_seed",
    "monte_carlo_mise",
    "rate_slope",
    "multivariate_normal_experiment",
    "canonical_selector",
]

log = logging.getLogger(__name__)

_SELECTOR_ALIASES = {
    "amise_oracle": "amise_oracle",
    "oracle": "amise_oracle",
    "gcpi": "gcpi",
    "silverman": "silverman",
    "lscv": "lscv",
}


def canonical_selector(name: str) -> str:
    try:
        return _SELECTOR_ALIASES[name.strip().lower()]
    except KeyError:
        raise ConfigError(
            f"unknown selector {name!r}; expected one of amise_oracle, gcpi, silverman, lscv"
        ) from None


@dataclass(frozen=True)
class ExperimentConfig:
    density: str = "kinked:eps=0.5"
    sizes: tuple[int, ...] = (250, 500, 1000, 2000)
    kernels: tuple[str, ...] = ("epanechnikov",)
    selectors: tuple[str, ...] = ("amise_oracle",)
    reps: int = 500
    master_seed: int = 123
    grid: EvaluationGrid = field(default_factory=lambda: EvaluationGrid(-6.0, 6.0, 1201))
    pilot_alpha: float = 1.0 / 6.0
    tau: float = DEFAULT_TAU
    # Oracle curvature; None means compute it from the density model.
    curvature: float | None = None

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        if not self.sizes or any(n < 2 for n in self.sizes):
            raise ConfigError("sizes must be a non-empty list of integers >= 2")
        if not self.kernels or not self.selectors:
            raise ConfigError("kernels and selectors must be non-empty")
        for k in self.kernels:
            get_kernel(k)
        object.__setattr__(self, "selectors", tuple(canonical_selector(s) for s in self.selectors))
        if not self.tau > 0:
            raise ConfigError("tau must be positive")
        if self.curvature is not None and not self.curvature > 0:
            raise ConfigError("curvature must be positive")


@dataclass(frozen=True)
class ResultRow:
    n: int
    kernel: str
    selector: str
    bandwidth_mean: float
    mean_ise: float
    se_ise: float
    median_h_ratio: float
    failures: int = 0

    CSV_HEADER = ("n", "kernel", "selector", "bandwidth_mean", "mean_ise", "se_ise", "median_h_ratio")

    def csv_fields(self) -> list[str]:
        return [
            str(self.n),
            self.kernel,
            self.selector,
            f"{self.bandwidth_mean:.17g}",
            f"{self.mean_ise:.17g}",
            f"{self.se_ise:.17g}",
            f"{self.median_h_ratio:.17g}",
        ]


def ise(estimate, truth, grid: EvaluationGrid | np.ndarray) -> float:
    """Trapezoid integral of (estimate - truth)^2."""
    est = np.asarray(estimate, dtype=float)
    tru = np.asarray(truth, dtype=float)
    xs = grid.points if isinstance(grid, EvaluationGrid) else np.asarray(grid, dtype=float)
    if est.shape != tru.shape or est.shape != xs.shape:
        raise LengthMismatch(f"lengths differ: {est.shape}, {tru.shape}, grid {xs.shape}")
    d = est - tru
    return float(np.trapezoid(d * d, xs))


def _domain_grid(model: DensityModel, h: float, kernel: KernelSpec, count: int) -> np.ndarray:
    lo, hi = model.quad_domain
    reach = kernel.integration_radius() * h if kernel.compact else 12.0 * h
    return np.linspace(lo - reach, hi + reach, count)


def integrated_variance(
    model: DensityModel, kernel: KernelSpec, h: float, n: int, count: int = 4001
) -> float:
    """R(K)/(n h) - ||K_h * f||^2 / n with the convolution norm by quadrature."""
    xs = _domain_grid(model, h, kernel, count)
    conv = kde_expectation_grid(model, kernel, h, xs)
    return kernel.roughness / (n * h) - float(np.trapezoid(conv * conv, xs)) / n


def integrated_squared_bias(
    model: DensityModel, kernel: KernelSpec, h: float, count: int = 4001
) -> float:
    xs = _domain_grid(model, h, kernel, count)
    bias = kde_expectation_grid(model, kernel, h, xs) - model.pdf(xs)
    return float(np.trapezoid(bias * bias, xs))


def mise_upper_bound(model: DensityModel, kernel: KernelSpec, h: float, n: int) -> float:
    return 0.25 * h**4 * kernel.abs_second_moment**2 * model.curvature + kernel.roughness / (n * h)


def pointwise_bias_bound(model: DensityModel, kernel: KernelSpec, h: float) -> float:
    """Lip(f') h^2 / 2 * integral of u^2 |K(u)|, uniform in x."""
    return 0.5 * model.lipschitz_fprime * h * h * kernel.abs_second_moment


def local_bias_bound(model: DensityModel, kernel: KernelSpec, h: float, x: float) -> float:
    """h^2 / 2 * M_h(x) * integral of u^2 |K(u)| for compactly supported K."""
    m = local_curvature_bound(model, x, h, kernel.support_radius)
    return 0.5 * h * h * m * kernel.abs_second_moment


def bias_at(model: DensityModel, kernel: KernelSpec, h: float, x: float) -> float:
    return kde_expectation(model, kernel, h, x) - float(model.pdf(x))


def replication_seed(master_seed: int, n: int, r: int) -> int:
    ss = np.random.SeedSequence([int(master_seed), int(n), int(r)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _lower_median(values) -> float:
    v = sorted(values)
    return float(v[(len(v) - 1) // 2]) if v else math.nan


def _run_replication(model, config, kernels, truth, oracle_h, n, r):
    sample = model.sample(replication_seed(config.master_seed, n, r), n)
    xs = config.grid.points
    out = {}
    cache = {}
    for kernel in kernels:
        for sel in config.selectors:
            try:
                if sel == "amise_oracle":
                    h = oracle_h[kernel.name][n]
                elif sel == "gcpi":
                    if "gcpi" not in cache:
                        cache["gcpi"] = gcpi_bandwidth(
                            sample, kernel, alpha=config.pilot_alpha, scaled=False, tau=config.tau
                        ).diagnostics["curvature"]
                    h = amise_bandwidth(kernel.roughness, kernel.mu2, cache["gcpi"], n)
                elif sel == "silverman":
                    if "silverman" not in cache:
                        cache["silverman"] = silverman_bandwidth(sample)
                    h = cache["silverman"]
                else:
                    h = lscv_bandwidth(sample, kernel).h
                est = kde_eval_grid(sample, kernel, h, xs)
                out[(kernel.name, sel)] = (h, ise(est, truth, xs))
            except WeakKDEError as exc:
                out[(kernel.name, sel)] = exc
    return out


def monte_carlo_mise(config: ExperimentConfig, workers: int = 1) -> list[ResultRow]:
    """Mean ISE, its standard error and bandwidth summaries per (n, kernel, selector)."""
    model = parse_density(config.density)
    kernels = [get_kernel(k) for k in config.kernels]
    truth = model.pdf(config.grid.points)
    curv = config.curvature if config.curvature is not None else model.curvature
    oracle_h = {
        k.name: {n: amise_bandwidth(k.roughness, k.mu2, curv, n) for n in config.sizes}
        for k in kernels
    }
    rows = []
    for n in config.sizes:
        def task(r, n=n):
            return _run_replication(model, config, kernels, truth, oracle_h, n, r)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(task, range(config.reps)))
        else:
            results = [task(r) for r in range(config.reps)]
        for kernel in kernels:
            for sel in config.selectors:
                key = (kernel.name, sel)
                ok = [res[key] for res in results if not isinstance(res[key], Exception)]
                failed = len(results) - len(ok)
                if failed:
                    log.warning("n=%d %s/%s: %d replication(s) failed", n, kernel.name, sel, failed)
                hs = np.array([v[0] for v in ok])
                ises = np.array([v[1] for v in ok])
                m = ises.size
                se = float(np.std(ises, ddof=1) / math.sqrt(m)) if m > 1 else 0.0
                rows.append(
                    ResultRow(
                        n=n,
                        kernel=kernel.name,
                        selector=sel,
                        bandwidth_mean=float(np.mean(hs)) if m else math.nan,
                        mean_ise=float(np.mean(ises)) if m else math.nan,
                        se_ise=se,
                        median_h_ratio=_lower_median(hs / oracle_h[kernel.name][n]),
                        failures=failed,
                    )
                )
    return rows


def rate_slope(ns, mean_ises) -> float:
    """Least-squares slope of log(mean ISE) against log(n)."""
    ns = np.asarray(ns, dtype=float)
    ys = np.asarray(mean_ises, dtype=float)
    if ns.size != ys.size:
        raise LengthMismatch("ns and mean_ises differ in length")
    if ns.size < 2:
        raise InsufficientPoints("rate_slope needs at least 2 points")
    if np.any(ns <= 0) or np.any(ys <= 0):
        raise InsufficientPoints("rate_slope needs positive values")
    lx, ly = np.log(ns), np.log(ys)
    lx = lx - lx.mean()
    return float(np.dot(lx, ly - ly.mean()) / np.dot(lx, lx))


def multivariate_normal_experiment(
    sizes=(250, 500, 1000, 2000),
    reps: int = 100,
    master_seed: int = 123,
    d: int = 2,
    kernel: str = "gaussian",
    limit: float = 5.0,
    count: int = 201,
    workers: int = 1,
) -> list[ResultRow]:
    """Mean ISE of the scalar-bandwidth product KDE for N(0, I_2) at the oracle h."""
    if d != 2:
        raise ConfigError("the multivariate experiment is implemented for d = 2")
    k = get_kernel(kernel)
    if k.name not in ("gaussian", "epanechnikov"):
        raise ConfigError("product kernels are gaussian or epanechnikov")
    axis = np.linspace(-limit, limit, count)
    phi = np.exp(-0.5 * axis * axis) / math.sqrt(2.0 * math.pi)
    truth = np.outer(phi, phi)
    lk = k.mu2**2 * gaussian_laplacian_norm_sq(d)
    rows = []
    for n in sizes:
        h = multivariate_amise_bandwidth(k.roughness**d, lk, d, n)

        def task(r, n=n, h=h):
            rng = np.random.Generator(np.random.PCG64(replication_seed(master_seed, n, r)))
            sample = Sample(rng.standard_normal((n, d)), generator_id=f"pcg64:mvn{d}")
            diff = kde_eval_tensor_grid(sample, k, h, [axis, axis]) - truth
            return float(np.trapezoid(np.trapezoid(diff * diff, axis, axis=1), axis))

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                ises = np.array(list(pool.map(task, range(reps))))
        else:
            ises = np.array([task(r) for r in range(reps)])
        se = float(np.std(ises, ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        rows.append(ResultRow(n, k.name, "amise_oracle", h, float(ises.mean()), se, 1.0))
    return rows
