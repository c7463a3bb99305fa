"""Composite quadrature helpers that split the domain at known breakpoints."""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np
from scipy.integrate import simpson


def breakpoints_within(lo: float, hi: float, points: Iterable[float]) -> list[float]:
    """Sorted, de-duplicated edges ``[lo, *inner, hi]``."""
    inner = sorted({float(p) for p in points if lo < p < hi})
    return [float(lo), *inner, float(hi)]


def _allocate(edges: list[float], total: int, odd: bool) -> list[int]:
    span = edges[-1] - edges[0]
    counts = []
    for a, b in zip(edges[:-1], edges[1:]):
        m = max(int(round(total * (b - a) / span)), 3)
        if odd and m % 2 == 0:
            m += 1
        counts.append(m)
    return counts


def piecewise_nodes(
    lo: float, hi: float, breaks: Iterable[float], total: int, odd: bool = True
) -> list[np.ndarray]:
    """Node arrays for each piece of ``[lo, hi]`` cut at ``breaks``."""
    edges = breakpoints_within(lo, hi, breaks)
    return [
        np.linspace(a, b, m)
        for a, b, m in zip(edges[:-1], edges[1:], _allocate(edges, total, odd))
    ]


def simpson_split(
    func: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    breaks: Iterable[float] = (),
    total: int = 4001,
) -> float:
    """Composite Simpson over ``[lo, hi]`` with pieces cut at ``breaks``.

    ``func`` receives the nodes of one piece at a time, so it may use the
    piece's interior to pick branches at the piece endpoints.
    """
    if hi <= lo:
        return 0.0
    return float(sum(simpson(func(x), x=x) for x in piecewise_nodes(lo, hi, breaks, total)))


def simpson_converged(
    func: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    tol: float = 1e-8,
    start: int = 2001,
    max_points: int = 2**21 + 1,
) -> tuple[float, bool]:
    """Simpson with doubling until successive estimates agree to ``tol``.

    Returns ``(value, converged)``; a non-finite value counts as not converged.
    """
    m = start
    prev = None
    while m <= max_points:
        x = np.linspace(lo, hi, m)
        val = float(simpson(func(x), x=x))
        if not np.isfinite(val):
            return val, False
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val, True
        prev = val
        m = 2 * m - 1
    return prev, False
