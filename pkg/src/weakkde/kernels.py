"""Second-order kernels and the exact functionals used in AMISE formulas.

Each registered kernel stores closed-form constants; :func:`make_kernel`
builds a kernel from an arbitrary evaluator and computes the constants by
quadrature instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    ConfigError,
    DegenerateKernel,
    NonIntegrableSecondMoment,
    NonIntegrableSquare,
)
from .quadrature import simpson_converged

__all__ = [
    "KernelSpec",
    "KERNELS",
    "EPANECHNIKOV",
    "GAUSSIAN",
    "BIWEIGHT",
    "EPANECHNIKOV_SQRT5",
    "get_kernel",
    "make_kernel",
    "kernel_eval",
    "kernel_second_moment",
    "kernel_roughness",
    "amise_kernel_constant",
    "kernel_self_convolution",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_SQRT5 = math.sqrt(5.0)
# Gaussian tails are below 1e-300 beyond this radius.
_INFINITE_SUPPORT_CUTOFF = 40.0


@dataclass(frozen=True)
class KernelSpec:
    name: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    support_radius: float
    mu2: float
    roughness: float
    abs_second_moment: float

    def __call__(self, u):
        return self.evaluate(u)

    @property
    def compact(self) -> bool:
        return math.isfinite(self.support_radius)

    @property
    def nonnegative(self) -> bool:
        return math.isclose(self.mu2, self.abs_second_moment, rel_tol=1e-12)

    def integration_radius(self) -> float:
        return self.support_radius if self.compact else _INFINITE_SUPPORT_CUTOFF


def _epanechnikov(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def _gaussian(u):
    u = np.asarray(u, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * u * u)


def _biweight(u):
    u = np.asarray(u, dtype=float)
    w = 1.0 - u * u
    return np.where(np.abs(u) <= 1.0, 0.9375 * w * w, 0.0)


def _epanechnikov_sqrt5(u):
    u = np.asarray(u, dtype=float)
    return np.where(
        np.abs(u) <= _SQRT5, 0.75 / _SQRT5 * (1.0 - u * u / 5.0), 0.0
    )


EPANECHNIKOV = KernelSpec("epanechnikov", _epanechnikov, 1.0, 0.2, 0.6, 0.2)
GAUSSIAN = KernelSpec(
    "gaussian", _gaussian, math.inf, 1.0, 1.0 / (2.0 * math.sqrt(math.pi)), 1.0
)
BIWEIGHT = KernelSpec("biweight", _biweight, 1.0, 1.0 / 7.0, 5.0 / 7.0, 1.0 / 7.0)
# Unit-variance rescaling of the Epanechnikov kernel, supported on [-sqrt5, sqrt5].
EPANECHNIKOV_SQRT5 = KernelSpec(
    "epanechnikov_sqrt5", _epanechnikov_sqrt5, _SQRT5, 1.0, 0.6 / _SQRT5, 1.0
)

KERNELS: dict[str, KernelSpec] = {
    k.name: k for k in (EPANECHNIKOV, GAUSSIAN, BIWEIGHT, EPANECHNIKOV_SQRT5)
}


def get_kernel(name: str) -> KernelSpec:
    try:
        return KERNELS[name.strip().lower()]
    except KeyError:
        raise ConfigError(
            f"unknown kernel {name!r}; expected one of {', '.join(KERNELS)}"
        ) from None


def _integrate_kernel_functional(evaluate, support_radius, weight, tol):
    def integrand(u):
        with np.errstate(over="ignore", invalid="ignore"):
            return weight(u, np.asarray(evaluate(u), dtype=float))

    if math.isfinite(support_radius):
        return simpson_converged(integrand, -support_radius, support_radius, tol=tol)
    # Infinite support: the truncated integral must also be stable when the
    # truncation radius doubles, otherwise the functional diverges.
    val, ok = simpson_converged(
        integrand, -_INFINITE_SUPPORT_CUTOFF, _INFINITE_SUPPORT_CUTOFF, tol=tol
    )
    wide, ok_wide = simpson_converged(
        integrand, -2 * _INFINITE_SUPPORT_CUTOFF, 2 * _INFINITE_SUPPORT_CUTOFF, tol=tol
    )
    stable = abs(wide - val) <= max(tol, 1e-6 * abs(val))
    return val, ok and ok_wide and stable


def make_kernel(
    name: str,
    evaluate: Callable[[np.ndarray], np.ndarray],
    support_radius: float = math.inf,
    tol: float = 1e-8,
) -> KernelSpec:
    """Build a kernel from a vectorized evaluator, computing its constants.

    Raises :class:`NonIntegrableSecondMoment` or :class:`NonIntegrableSquare`
    when the corresponding integral does not settle under refinement.
    """
    abs_m2, ok = _integrate_kernel_functional(
        evaluate, support_radius, lambda u, k: u * u * np.abs(k), tol
    )
    if not ok:
        raise NonIntegrableSecondMoment(f"kernel {name!r}: u^2|K(u)| is not integrable")
    mu2, _ = _integrate_kernel_functional(evaluate, support_radius, lambda u, k: u * u * k, tol)
    rough, ok = _integrate_kernel_functional(evaluate, support_radius, lambda u, k: k * k, tol)
    if not ok:
        raise NonIntegrableSquare(f"kernel {name!r}: K is not square integrable")

    def bounded(u, _f=evaluate, _r=support_radius):
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) <= _r, _f(u), 0.0)

    return KernelSpec(name, bounded, float(support_radius), mu2, rough, abs_m2)


def kernel_eval(kernel: KernelSpec, u):
    """K(u); scalar in, float out."""
    val = kernel.evaluate(u)
    return float(val) if np.ndim(val) == 0 else val


def kernel_second_moment(kernel: KernelSpec) -> float:
    return kernel.mu2


def kernel_roughness(kernel: KernelSpec) -> float:
    return kernel.roughness


def amise_kernel_constant(kernel: KernelSpec) -> float:
    """Kernel-dependent factor |mu2|^(2/5) R(K)^(4/5) of the optimized AMISE."""
    if kernel.mu2 == 0.0:
        raise DegenerateKernel(
            f"kernel {kernel.name!r} has zero second moment; the h^4 bias term vanishes"
        )
    return abs(kernel.mu2) ** 0.4 * kernel.roughness**0.8


def _epan_self_conv(u):
    a = np.abs(np.asarray(u, dtype=float))
    return np.where(
        a <= 2.0, 0.6 - 0.75 * a**2 + 0.375 * a**3 - 0.01875 * a**5, 0.0
    )


def kernel_self_convolution(kernel: KernelSpec) -> Callable[[np.ndarray], np.ndarray] | None:
    """Closed form of (K*K)(u) where one is known, else ``None``."""
    if kernel.name == "gaussian":
        return lambda u: np.exp(-0.25 * np.asarray(u, dtype=float) ** 2) / (2.0 * math.sqrt(math.pi))
    if kernel.name == "epanechnikov":
        return _epan_self_conv
    if kernel.name == "epanechnikov_sqrt5":
        return lambda u: _epan_self_conv(np.asarray(u, dtype=float) / _SQRT5) / _SQRT5
    return None
