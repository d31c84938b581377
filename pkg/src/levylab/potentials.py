"""Scalar objective functions with analytic gradients and Gibbs densities.

All built-in potentials are one-dimensional and confining (superlinear
gradient growth), so exp(-eps^-alpha * f) is integrable and the Gibbs
density is well defined on a wide enough grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import GridTooSmallError, ParameterError

__all__ = [
    "Potential",
    "GibbsSpec",
    "quartic",
    "asymmetric_double_well",
    "default_grid",
    "gibbs_density",
    "gibbs_expectation",
]


@dataclass(frozen=True)
class Potential:
    """Objective f with analytic gradient and classified critical points.

    minima and saddles interlace: m_1 < s_1 < m_2 < ... ; domain_radius is a
    scale beyond which |f'| grows superlinearly (used to size default grids).
    """

    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    minima: tuple
    saddles: tuple
    domain_radius: float = 6.0
    name: str = "potential"

    def __post_init__(self):
        pts = []
        for m, s in zip(self.minima, self.saddles + (None,)):
            pts.append(m)
            if s is not None:
                pts.append(s)
        if list(pts) != sorted(pts):
            raise ParameterError("minima and saddles must interlace in increasing order")

    def __call__(self, w):
        return self.value(np.asarray(w, dtype=float))

    def gradient(self, w):
        return self.grad(np.asarray(w, dtype=float))

    @property
    def critical_points(self):
        """(location, kind) pairs in increasing order."""
        out = [(m, "min") for m in self.minima] + [(s, "max") for s in self.saddles]
        return sorted(out)


def quartic() -> Potential:
    """f(w) = w^4/4 - w^2/2 with minima at -1, +1 and a maximum at 0."""
    return Potential(
        value=lambda w: w**4 / 4.0 - w**2 / 2.0,
        grad=lambda w: w**3 - w,
        minima=(-1.0, 1.0),
        saddles=(0.0,),
        domain_radius=6.0,
        name="quartic",
    )


def asymmetric_double_well(m1: float, s1: float, m2: float, c: float = 1.0) -> Potential:
    """Quartic-type double well with prescribed critical points m1 < s1 < m2.

    The gradient is c*(w-m1)*(w-s1)*(w-m2) for c > 0, so the critical points
    are exactly the three roots with non-degenerate curvature.
    """
    if not (m1 < s1 < m2):
        raise ParameterError(f"need m1 < s1 < m2, got {m1}, {s1}, {m2}")
    if not (c > 0):
        raise ParameterError(f"need c > 0, got {c}")
    e1 = m1 + s1 + m2
    e2 = m1 * s1 + m1 * m2 + s1 * m2
    e3 = m1 * s1 * m2

    def value(w):
        return c * (w**4 / 4.0 - e1 * w**3 / 3.0 + e2 * w**2 / 2.0 - e3 * w)

    def grad(w):
        return c * (w - m1) * (w - s1) * (w - m2)

    radius = max(abs(m1), abs(m2)) + 5.0
    return Potential(value=value, grad=grad, minima=(m1, m2), saddles=(s1,),
                     domain_radius=radius, name="double_well")


@dataclass(frozen=True)
class GibbsSpec:
    """Target density proportional to exp(-epsilon^-alpha * f(w))."""

    potential: Potential
    epsilon: float = 1.0
    alpha: float = 1.5

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise ParameterError(f"epsilon must be > 0, got {self.epsilon}")
        if not (1.0 < self.alpha < 2.0):
            raise ParameterError(f"alpha must be in (1, 2), got {self.alpha}")

    @property
    def beta(self) -> float:
        """Inverse-temperature factor epsilon^-alpha."""
        return self.epsilon ** (-self.alpha)

    def log_weight(self, w):
        return -self.beta * self.potential(w)


def default_grid(potential: Potential, n: int = 4096) -> np.ndarray:
    """Uniform grid spanning the wells with generous margin."""
    lo = min(potential.minima) - potential.domain_radius + 1.0
    hi = max(potential.minima) + potential.domain_radius - 1.0
    lo, hi = min(lo, -6.0), max(hi, 6.0)
    return np.linspace(lo, hi, n)


def gibbs_density(spec: GibbsSpec, grid: np.ndarray | None = None,
                  boundary_tol: float = 1e-3):
    """Normalized Gibbs density on a uniform grid.

    Raises GridTooSmallError when more than boundary_tol of the mass sits in
    the outermost 2% of the grid, which indicates a non-negligible tail was
    cut off.
    """
    if grid is None:
        grid = _auto_grid(spec)
    grid = np.asarray(grid, dtype=float)
    if grid.size < 512:
        raise ParameterError(f"grid needs >= 512 points, got {grid.size}")
    span_lo = min(spec.potential.minima) - 3.0
    span_hi = max(spec.potential.minima) + 3.0
    if grid[0] > span_lo or grid[-1] < span_hi:
        raise ParameterError(
            f"grid [{grid[0]}, {grid[-1]}] must span [{span_lo}, {span_hi}]"
        )
    logw = spec.log_weight(grid)
    logw -= logw.max()
    dens = np.exp(logw)
    z = np.trapezoid(dens, grid)
    dens /= z
    edge = max(2, int(0.02 * grid.size))
    edge_mass = np.trapezoid(dens[:edge], grid[:edge]) + np.trapezoid(dens[-edge:], grid[-edge:])
    if edge_mass > boundary_tol:
        raise GridTooSmallError(
            f"boundary mass {edge_mass:.2e} exceeds {boundary_tol:.0e}; widen the grid"
        )
    return grid, dens


def _auto_grid(spec: GibbsSpec, n: int = 4096) -> np.ndarray:
    """Default grid, widened until the boundary carries < 1e-3 of the mass."""
    grid = default_grid(spec.potential, n)
    for _ in range(12):
        try:
            gibbs_density(spec, grid)
            return grid
        except GridTooSmallError:
            half = (grid[-1] - grid[0]) * 0.75
            mid = 0.5 * (grid[0] + grid[-1])
            grid = np.linspace(mid - half, mid + half, n)
    return grid


def gibbs_expectation(spec: GibbsSpec, g: Callable[[np.ndarray], np.ndarray],
                      grid: np.ndarray | None = None) -> float:
    """Quadrature of a test function against the Gibbs density."""
    grid, dens = gibbs_density(spec, grid)
    return float(np.trapezoid(np.asarray(g(grid), dtype=float) * dens, grid))
