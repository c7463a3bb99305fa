"""Example densities in C^{1,1} but not C^2, with a.e. second derivatives.

Every model exposes the density, its first derivative, the a.e. second
derivative with a branch selector at kinks, a sampler that is a pure
function of ``(seed, n)``, and the curvature functionals built on them.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate
from scipy.special import expit, ndtr, ndtri

from .errors import AtKinkPoint, ConfigError, InvalidParameter
from .quadrature import piecewise_nodes
from .sample import Sample

__all__ = [
    "CurvatureInterval",
    "DensityModel",
    "KinkedGaussian",
    "HuberDensity",
    "ThresholdDensity",
    "CompactKinked",
    "parse_density",
    "density_pdf",
    "density_second_ae",
    "weak_curvature",
    "density_sample",
    "generalized_second_interval",
    "local_curvature_bound",
    "rejection_sample",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _phi(x):
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


@dataclass(frozen=True)
class CurvatureInterval:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("lower must not exceed upper")

    @property
    def is_singleton(self) -> bool:
        return self.lower == self.upper

    def __contains__(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def rejection_sample(rng: np.random.Generator, n: int, propose, accept_prob, batch_factor=1.6):
    """Draw ``n`` accepted points; returns ``(values, proposals_used)``.

    Proposals come in batches whose size depends only on how many draws are
    still missing, so the output is a pure function of the generator state.
    """
    out = []
    have = 0
    used = 0
    while have < n:
        m = int(math.ceil((n - have) * batch_factor)) + 16
        z = propose(rng, m)
        u = rng.random(m)
        hit = u < accept_prob(z)
        keep = z[hit]
        need = n - have
        if keep.size >= need:
            # Count proposals only up to the one that completed the sample.
            idx = np.flatnonzero(hit)[need - 1]
            used += idx + 1
            out.append(keep[:need])
            have = n
        else:
            used += m
            out.append(keep)
            have += keep.size
    return np.concatenate(out), used


def _normal_proposal(rng, m):
    return rng.standard_normal(m)


class DensityModel:
    """Base class; subclasses implement the pdf and branch-aware derivatives."""

    name = "density"
    kink_points: tuple[float, ...] = ()
    quad_domain: tuple[float, float] = (-15.0, 15.0)
    normalization = 1.0

    def spec(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec()}>"

    # --- evaluators -------------------------------------------------------
    def pdf(self, x):
        raise NotImplementedError

    def pdf_prime(self, x):
        raise NotImplementedError

    def _second(self, x: np.ndarray, side: int) -> np.ndarray:
        """f'' with the branch at kink points chosen by ``side`` (-1 left, +1 right)."""
        raise NotImplementedError

    def second_derivative(self, x, side: int = 0):
        """A.e. second derivative.

        With ``side=0`` any argument lying exactly on a kink raises
        :class:`AtKinkPoint`; ``side=-1``/``+1`` return the left/right limit there.
        """
        arr = np.asarray(x, dtype=float)
        if side == 0:
            if self.kink_points and np.isin(arr, self.kink_points).any():
                raise AtKinkPoint(f"second derivative undefined at kink of {self.spec()}")
            side = 1
        out = self._second(np.atleast_1d(arr), side)
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def second_ae_or_nan(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self._second(np.atleast_1d(x), 1).reshape(x.shape)
        if self.kink_points:
            out = np.where(np.isin(x, self.kink_points), np.nan, out)
        return out

    def one_sided_limits(self, x: float) -> tuple[float, float]:
        arr = np.array([float(x)])
        return float(self._second(arr, -1)[0]), float(self._second(arr, 1)[0])

    # --- sampling ---------------------------------------------------------
    def _draw(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, int]:
        raise NotImplementedError

    def sample(self, seed: int, n: int) -> Sample:
        if n < 1:
            raise InvalidParameter("sample size must be positive")
        rng = np.random.Generator(np.random.PCG64(int(seed)))
        values, _ = self._draw(rng, int(n))
        return Sample(values, seed=int(seed), generator_id=f"pcg64:{self.spec()}")

    # --- derived constants -----------------------------------------------
    def grid(self, count: int) -> np.ndarray:
        lo, hi = self.quad_domain
        return np.linspace(lo, hi, count)

    @cached_property
    def lipschitz_fprime(self) -> float:
        """Grid supremum of |f''| (with kink limits), inflated by 5%."""
        x = self.grid(100001)
        peak = float(np.max(np.abs(self._second(x, 1))))
        for k in self.kink_points:
            peak = max(peak, *(abs(v) for v in self.one_sided_limits(k)))
        return 1.05 * peak

    @cached_property
    def curvature(self) -> float:
        return weak_curvature(self)


class KinkedGaussian(DensityModel):
    """phi(x) * (1 + eps * psi(x)) with psi(x) = x|x| / (1 + x^2)."""

    name = "kinked"
    quad_domain = (-12.0, 12.0)

    def __init__(self, eps: float = 0.5):
        eps = float(eps)
        if not abs(eps) < 1.0:
            raise InvalidParameter(f"kinked density needs |eps| < 1, got {eps}")
        self.eps = eps
        self.kink_points = (0.0,) if eps != 0.0 else ()

    def spec(self):
        return f"kinked:eps={self.eps:g}"

    @staticmethod
    def _psi(x):
        return x * np.abs(x) / (1.0 + x * x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = _phi(x) * (1.0 + self.eps * self._psi(x))
        return float(out) if out.ndim == 0 else out

    def pdf_prime(self, x):
        x = np.asarray(x, dtype=float)
        dpsi = 2.0 * np.abs(x) / (1.0 + x * x) ** 2
        out = _phi(x) * (-x * (1.0 + self.eps * self._psi(x)) + self.eps * dpsi)
        return float(out) if out.ndim == 0 else out

    def _second(self, x, side):
        sgn = np.where(x > 0, 1.0, np.where(x < 0, -1.0, float(side)))
        x2 = x * x
        psi = self._psi(x)
        dpsi = sgn * 2.0 * x / (1.0 + x2) ** 2
        d2psi = sgn * 2.0 * (1.0 - 3.0 * x2) / (1.0 + x2) ** 3
        e = self.eps
        return _phi(x) * ((x2 - 1.0) * (1.0 + e * psi) - 2.0 * e * x * dpsi + e * d2psi)

    def cdf(self, x):
        """CDF; the perturbation term integrates by quadrature."""
        x = np.asarray(x, dtype=float)
        base = ndtr(x)
        if self.eps == 0.0:
            return base
        flat = np.atleast_1d(x)
        extra = np.array(
            [integrate.quad(lambda t: _phi(t) * self._psi(t), -np.inf, v)[0] for v in flat]
        )
        return base + self.eps * extra.reshape(x.shape)

    def _draw(self, rng, n):
        e = self.eps
        return rejection_sample(
            rng,
            n,
            _normal_proposal,
            lambda z: (1.0 + e * self._psi(z)) / (1.0 + abs(e)),
        )


class HuberDensity(DensityModel):
    """exp(-U_c) / Z_c with the Huber potential U_c."""

    name = "huber"

    def __init__(self, c: float = 1.0):
        c = float(c)
        if not c > 0.0:
            raise InvalidParameter(f"huber density needs c > 0, got {c}")
        self.c = c
        self.kink_points = (-c, c)
        self.normalization = _SQRT_2PI * (2.0 * ndtr(c) - 1.0) + (2.0 / c) * math.exp(-0.5 * c * c)
        # Exponential tails: the mass beyond c + 30/c is below 1e-13.
        reach = max(15.0, c + 30.0 / c)
        self.quad_domain = (-reach, reach)

    def spec(self):
        return f"huber:c={self.c:g}"

    def _potential(self, x):
        a = np.abs(x)
        return np.where(a <= self.c, 0.5 * x * x, self.c * a - 0.5 * self.c**2)

    def _dpotential(self, x):
        return np.clip(x, -self.c, self.c)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.exp(-self._potential(x)) / self.normalization
        return float(out) if out.ndim == 0 else out

    def pdf_prime(self, x):
        x = np.asarray(x, dtype=float)
        out = -self._dpotential(x) * np.exp(-self._potential(x)) / self.normalization
        return float(out) if out.ndim == 0 else out

    def _second(self, x, side):
        a = np.abs(x)
        # At |x| = c the inner branch is the one approached from the origin side.
        on_edge = a == self.c
        inner = (a < self.c) | (on_edge & (side * np.sign(x) < 0))
        u2 = np.where(inner, 1.0, 0.0)
        u1 = self._dpotential(x)
        return (u1 * u1 - u2) * np.exp(-self._potential(x)) / self.normalization

    def _draw(self, rng, n):
        c = self.c
        z = self.normalization
        p_tail = math.exp(-0.5 * c * c) / (c * z)
        p_core = 1.0 - 2.0 * p_tail
        u = rng.random(n)
        out = np.empty(n)
        left = u < p_tail
        right = u >= p_tail + p_core
        core = ~(left | right)
        with np.errstate(divide="ignore"):
            out[left] = -c + np.log(u[left] / p_tail) / c
            out[right] = c - np.log1p(-(u[right] - p_tail - p_core) / p_tail) / c
        lo = ndtr(-c)
        out[core] = ndtri(lo + (u[core] - p_tail) / p_core * (1.0 - 2.0 * lo))
        return out, n


class ThresholdDensity(DensityModel):
    """exp(-x^2/2 - lam/2 (x-a)_+^2) / Z: curvature jumps by lam after a."""

    name = "threshold"

    def __init__(self, a: float = 0.5, lam: float = 4.0):
        a, lam = float(a), float(lam)
        if not lam > 0.0:
            raise InvalidParameter(f"threshold density needs lambda > 0, got {lam}")
        self.a = a
        self.lam = lam
        self.kink_points = (a,)
        s = math.sqrt(1.0 + lam)
        self.normalization = _SQRT_2PI * ndtr(a) + (_SQRT_2PI / s) * math.exp(
            -lam * a * a / (2.0 * (1.0 + lam))
        ) * ndtr(-a / s)

    def spec(self):
        return f"threshold:a={self.a:g},lambda={self.lam:g}"

    def _excess(self, x):
        return np.maximum(x - self.a, 0.0)

    def _potential(self, x):
        return 0.5 * x * x + 0.5 * self.lam * self._excess(x) ** 2

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.exp(-self._potential(x)) / self.normalization
        return float(out) if out.ndim == 0 else out

    def pdf_prime(self, x):
        x = np.asarray(x, dtype=float)
        du = x + self.lam * self._excess(x)
        out = -du * np.exp(-self._potential(x)) / self.normalization
        return float(out) if out.ndim == 0 else out

    def _second(self, x, side):
        above = (x > self.a) | ((x == self.a) & (side > 0))
        du = x + self.lam * self._excess(x)
        d2u = np.where(above, 1.0 + self.lam, 1.0)
        return (du * du - d2u) * np.exp(-self._potential(x)) / self.normalization

    def _draw(self, rng, n):
        lam = self.lam
        return rejection_sample(
            rng, n, _normal_proposal, lambda z: np.exp(-0.5 * lam * self._excess(z) ** 2)
        )


def _bump_transition(t):
    """Smooth step S(t)=1/(1+exp(1/t - 1/(1-t))) on 0<t<1 with S', S''."""
    z = 1.0 / t - 1.0 / (1.0 - t)
    dz = -1.0 / t**2 - 1.0 / (1.0 - t) ** 2
    d2z = 2.0 / t**3 - 2.0 / (1.0 - t) ** 3
    s = expit(-z)
    w = s * (1.0 - s)
    ds = -w * dz
    d2s = -(1.0 - 2.0 * s) * ds * dz - w * d2z
    return s, ds, d2s


class CompactKinked(DensityModel):
    """(b + eps*q) / integral, with b a mollifier on (-3,3) and q = x|x|rho(x).

    rho equals one on [-1/2, 1/2] and vanishes outside [-1, 1].
    """

    name = "compact_kinked"
    quad_domain = (-3.0, 3.0)
    _half_width = 3.0

    def __init__(self, eps: float | str = "auto"):
        raw = integrate.quad(self._mollifier_raw, -3.0, 3.0, epsabs=1e-14, epsrel=1e-13)[0]
        self._b_scale = 1.0 / raw
        self.eps0 = self._compute_eps0()
        if isinstance(eps, str):
            if eps.strip().lower() != "auto":
                raise InvalidParameter(f"compact_kinked eps must be a number or 'auto', got {eps!r}")
            eps = 0.5 * self.eps0
        eps = float(eps)
        if not abs(eps) < self.eps0:
            raise InvalidParameter(
                f"compact_kinked needs |eps| < eps0 = {self.eps0:.6g}, got {eps}"
            )
        self.eps = eps
        self.kink_points = (0.0,) if eps != 0.0 else ()
        # q is odd and b is normalized, so the integral is one up to quadrature error.
        self.normalization = 1.0 + eps * integrate.quad(
            lambda t: float(self._q_parts(np.array([t]), 1)[0][0]), -1.0, 1.0, points=[0.0]
        )[0]

    def spec(self):
        return f"compact_kinked:eps={self.eps:.17g}"

    @staticmethod
    def _mollifier_raw(x):
        s2 = (np.asarray(x, dtype=float) / 3.0) ** 2
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(s2 < 1.0, np.exp(-1.0 / np.where(s2 < 1.0, 1.0 - s2, 1.0)), 0.0)

    def _b_value(self, x):
        inside = np.abs(x) < self._half_width
        w = 1.0 - (np.where(inside, x, 0.0) / 3.0) ** 2
        return np.where(inside, self._b_scale * np.exp(-1.0 / w), 0.0)

    def _q_value(self, x):
        a = np.abs(x)
        rho = np.where(a <= 0.5, 1.0, 0.0)
        mid = (a > 0.5) & (a < 1.0)
        if mid.any():
            t = 2.0 * (1.0 - a[mid])
            rho[mid] = expit(-(1.0 / t - 1.0 / (1.0 - t)))
        return x * a * rho

    def _b_parts(self, x):
        inside = np.abs(x) < self._half_width
        xs = np.where(inside, x, 0.0)
        w = 1.0 - (xs / 3.0) ** 2
        b = np.where(inside, self._b_scale * np.exp(-1.0 / w), 0.0)
        g1 = -2.0 * xs / (9.0 * w * w)
        g1p = -2.0 / (9.0 * w * w) - 8.0 * xs * xs / (81.0 * w**3)
        db = np.where(inside, b * g1, 0.0)
        d2b = np.where(inside, b * (g1 * g1 + g1p), 0.0)
        return b, db, d2b

    @staticmethod
    def _rho_parts(a):
        """rho, rho', rho'' as functions of a = |x|."""
        rho = np.where(a <= 0.5, 1.0, 0.0)
        d1 = np.zeros_like(a)
        d2 = np.zeros_like(a)
        mid = (a > 0.5) & (a < 1.0)
        if mid.any():
            t = 2.0 * (1.0 - a[mid])
            s, ds, d2s = _bump_transition(t)
            rho[mid] = s
            d1[mid] = -2.0 * ds
            d2[mid] = 4.0 * d2s
        return rho, d1, d2

    def _q_parts(self, x, side):
        a = np.abs(x)
        sgn = np.where(x > 0, 1.0, np.where(x < 0, -1.0, float(side)))
        rho, r1, r2 = self._rho_parts(a)
        # Work with p(a) = a^2 rho(a) on a >= 0; q(x) = sgn(x) p(|x|).
        p = a * a * rho
        dp = 2.0 * a * rho + a * a * r1
        d2p = 2.0 * rho + 4.0 * a * r1 + a * a * r2
        return sgn * p, dp, sgn * d2p

    def _compute_eps0(self) -> float:
        x = np.linspace(-1.0, 1.0, 200001)
        b = self._b_parts(x)[0]
        q = np.abs(self._q_parts(x, 1)[0])
        mask = q > 0
        return float(np.min(b[mask] / q[mask]))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        xa = np.atleast_1d(x)
        out = (self._b_value(xa) + self.eps * self._q_value(xa)) / self.normalization
        out = np.maximum(out, 0.0).reshape(x.shape)
        return float(out) if out.ndim == 0 else out

    def pdf_prime(self, x):
        x = np.asarray(x, dtype=float)
        xa = np.atleast_1d(x)
        out = (self._b_parts(xa)[1] + self.eps * self._q_parts(xa, 1)[1]) / self.normalization
        out = out.reshape(x.shape)
        return float(out) if out.ndim == 0 else out

    def _second(self, x, side):
        return (self._b_parts(x)[2] + self.eps * self._q_parts(x, side)[2]) / self.normalization

    @cached_property
    def _envelope(self) -> float:
        x = np.linspace(-3.0, 3.0, 60001)
        return 1.01 * float(np.max(self.pdf(x)))

    def _draw(self, rng, n):
        m = self._envelope
        return rejection_sample(
            rng,
            n,
            lambda r, k: r.uniform(-3.0, 3.0, k),
            lambda z: self.pdf(z) / m,
            batch_factor=2.0 * 6.0 * m,
        )


_DENSITY_SPEC = re.compile(r"^\s*([a-z_]+)\s*(?::(.*))?$")


def parse_density(spec: str) -> DensityModel:
    """Build a model from ``name:key=value,...`` (e.g. ``huber:c=1``)."""
    m = _DENSITY_SPEC.match(spec.lower())
    if not m:
        raise ConfigError(f"cannot parse density spec {spec!r}")
    name, rest = m.group(1), m.group(2) or ""
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        if "=" not in item:
            raise ConfigError(f"density parameter {item!r} is not key=value")
        k, v = (s.strip() for s in item.split("=", 1))
        params[k] = v

    def num(key, default):
        try:
            return float(params.pop(key, default))
        except ValueError:
            raise ConfigError(f"density parameter {key!r} must be numeric") from None

    if name == "gaussian":
        model = KinkedGaussian(0.0)
    elif name == "kinked":
        model = KinkedGaussian(num("eps", 0.5))
    elif name == "huber":
        model = HuberDensity(num("c", 1.0))
    elif name == "threshold":
        lam = params.pop("lambda", params.pop("lam", "4"))
        try:
            lam = float(lam)
        except ValueError:
            raise ConfigError("density parameter 'lambda' must be numeric") from None
        model = ThresholdDensity(num("a", 0.5), lam)
    elif name == "compact_kinked":
        eps = params.pop("eps", "auto")
        model = CompactKinked(eps if eps == "auto" else _to_float(eps))
    else:
        raise ConfigError(f"unknown density {name!r}")
    if params:
        raise ConfigError(f"unknown parameter(s) for {name}: {', '.join(params)}")
    return model


def _to_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}") from None


def density_pdf(model: DensityModel, x: float) -> float:
    return model.pdf(x)


def density_second_ae(model: DensityModel, x: float) -> float:
    return model.second_derivative(x)


def weak_curvature(model: DensityModel, n_points: int = 200001) -> float:
    """Trapezoid quadrature of (f'')^2 over the model's domain.

    The grid is cut at kinks and each piece uses the one-sided limit at its
    ends, so the result does not depend on the value assigned at a kink.
    """
    lo, hi = model.quad_domain
    edges = [lo, *[k for k in model.kink_points if lo < k < hi], hi]
    if len(edges) == 2:
        x = np.linspace(lo, hi, n_points)
        return float(np.trapezoid(model._second(x, 1) ** 2, x))
    total = 0.0
    for x in piecewise_nodes(lo, hi, model.kink_points, n_points, odd=False):
        # Interior side of each piece: right limit at its left end, left at its right end.
        y = model._second(x, 1)
        y[-1] = model._second(x[-1:], -1)[0]
        total += float(np.trapezoid(y * y, x))
    return total


def density_sample(model: DensityModel, seed: int, n: int) -> Sample:
    return model.sample(seed, n)


def generalized_second_interval(model: DensityModel, x: float) -> CurvatureInterval:
    """Convex hull of the one-sided limits of f'' at ``x``."""
    left, right = model.one_sided_limits(x)
    return CurvatureInterval(min(left, right), max(left, right))


def local_curvature_bound(
    model: DensityModel, x: float, h: float, support_radius: float, points: int = 4001
) -> float:
    """sup of |generalized f''| over the window [x - A h, x + A h]."""
    if not math.isfinite(support_radius):
        raise InvalidParameter("local curvature bound needs a compactly supported kernel")
    lo, hi = x - support_radius * h, x + support_radius * h
    y = np.linspace(lo, hi, points)
    peak = float(np.max(np.abs(model._second(y, 1))))
    peak = max(peak, abs(float(model._second(y[-1:], -1)[0])))
    for k in model.kink_points:
        if lo <= k <= hi:
            peak = max(peak, *(abs(v) for v in model.one_sided_limits(k)))
    return peak
