"""Discretized L2([0,1]) arithmetic on fixed quadrature grids.

A function is represented by its values on a grid of abscissae with
quadrature weights; a kernel (covariance surface) by its values on the
grid product.  All inner products, norms and bilinear forms below are the
corresponding quadrature sums, so they converge to the continuum integrals
as the grid is refined but are exact, reproducible finite sums at any size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "GridFunction",
    "Kernel",
    "GridMismatchError",
    "uniform_grid",
    "trapezoid_grid",
    "fourier_basis",
    "inner_product",
    "norm_l2",
    "tensor_product",
    "kernel_l2_norm",
    "pairing",
    "hs_operator_norm",
]

WEIGHT_SUM_TOL = 1e-12
SYMMETRY_TOL = 1e-10
PSD_REL_TOL = 1e-8


class GridMismatchError(ValueError):
    """Raised when operands do not share a common grid."""


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Grid:
    """Quadrature grid on [0,1].

    Parameters
    ----------
    points : ndarray, shape (G,)
        Strictly increasing abscissae in [0, 1].
    weights : ndarray, shape (G,)
        Positive quadrature weights summing to 1 (total measure of [0,1]).
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = _readonly(self.points)
        wts = _readonly(self.weights)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("grid points must be a nonempty 1-d array")
        if wts.shape != pts.shape:
            raise ValueError("weights must have the same shape as points")
        if pts[0] < 0.0 or pts[-1] > 1.0 or np.any(np.diff(pts) <= 0.0):
            raise ValueError("points must be strictly increasing within [0, 1]")
        if np.any(wts <= 0.0):
            raise ValueError("weights must be positive")
        if abs(wts.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(
                f"weights must sum to 1 within {WEIGHT_SUM_TOL}, got {wts.sum()!r}"
            )
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @property
    def size(self) -> int:
        return self.points.size

    def matches(self, other: "Grid") -> bool:
        if self is other:
            return True
        return np.array_equal(self.points, other.points) and np.array_equal(
            self.weights, other.weights
        )


def _require_same_grid(a: Grid, b: Grid) -> None:
    if not a.matches(b):
        raise GridMismatchError("operands are defined on different grids")


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A real function given by its values on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = _readonly(self.values)
        if vals.shape != (self.grid.size,):
            raise ValueError(
                f"values must have shape ({self.grid.size},), got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class Kernel:
    """A real kernel on [0,1]^2 given by its values on the grid product.

    Symmetry and positive semidefiniteness are properties of particular
    kernels, not of the container; they are checked on demand via
    :meth:`is_symmetric` and :meth:`check_psd`.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = _readonly(self.values)
        g = self.grid.size
        if vals.shape != (g, g):
            raise ValueError(f"values must have shape ({g}, {g}), got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", vals)

    def is_symmetric(self, tol: float = SYMMETRY_TOL) -> bool:
        return bool(np.max(np.abs(self.values - self.values.T)) <= tol)

    def check_psd(self, rel_tol: float = PSD_REL_TOL) -> None:
        """Raise ValueError if the symmetrized matrix has an eigenvalue
        below ``-rel_tol * max(eigenvalue, 1)``."""
        sym = 0.5 * (self.values + self.values.T)
        eig = np.linalg.eigvalsh(sym)
        floor = -rel_tol * max(eig[-1], 1.0)
        if eig[0] < floor:
            raise ValueError(
                f"kernel is not positive semidefinite: min eigenvalue {eig[0]:.3e}"
            )


def uniform_grid(size: int) -> Grid:
    """Midpoint-rule grid: points (i+1/2)/G, weights 1/G.

    The composite midpoint rule is second-order accurate and makes the
    first ``G/2`` Fourier modes exactly orthonormal in the discrete inner
    product, which downstream covariance identities rely on.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    points = (np.arange(size) + 0.5) / size
    weights = np.full(size, 1.0 / size)
    return Grid(points, weights)


def trapezoid_grid(size: int) -> Grid:
    """Trapezoid-rule grid on [0,1] with ``size >= 2`` points."""
    if size < 2:
        raise ValueError("size must be >= 2")
    points = np.linspace(0.0, 1.0, size)
    h = 1.0 / (size - 1)
    weights = np.full(size, h)
    weights[0] = weights[-1] = h / 2.0
    return Grid(points, weights)


def fourier_basis(grid: Grid, size: int) -> list[GridFunction]:
    """First ``size`` elements of the Fourier basis of L2([0,1]).

    Ordering: 1, sqrt(2) sin(2 pi x), sqrt(2) cos(2 pi x),
    sqrt(2) sin(4 pi x), sqrt(2) cos(4 pi x), ...

    On a :func:`uniform_grid` these are discretely orthonormal to machine
    precision as long as ``size`` stays well below the grid size.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    if size > grid.size:
        raise ValueError("basis size cannot exceed the grid size")
    x = grid.points
    out = [GridFunction(grid, np.ones_like(x))]
    k = 1
    while len(out) < size:
        out.append(GridFunction(grid, np.sqrt(2.0) * np.sin(2.0 * np.pi * k * x)))
        if len(out) < size:
            out.append(GridFunction(grid, np.sqrt(2.0) * np.cos(2.0 * np.pi * k * x)))
        k += 1
    return out


def inner_product(f: GridFunction, g: GridFunction) -> float:
    """Quadrature inner product sum_i w_i f(x_i) g(x_i)."""
    _require_same_grid(f.grid, g.grid)
    return float(np.sum(f.grid.weights * f.values * g.values))


def norm_l2(f: GridFunction) -> float:
    """L2 norm sqrt(<f, f>)."""
    return float(np.sqrt(np.sum(f.grid.weights * f.values * f.values)))


def tensor_product(f: GridFunction, g: GridFunction) -> Kernel:
    """Rank-one kernel (f ⊗ g)(x, y) = f(x) g(y)."""
    _require_same_grid(f.grid, g.grid)
    return Kernel(f.grid, np.outer(f.values, g.values))


def kernel_l2_norm(k: Kernel) -> float:
    """L2(mu x mu) norm: sqrt(sum_ij w_i w_j K(x_i, x_j)^2)."""
    w = k.grid.weights
    return float(np.sqrt(w @ (k.values * k.values) @ w))


def pairing(k: Kernel, g: GridFunction) -> float:
    """Bilinear form sum_ij w_i w_j K(x_i, x_j) g(x_i) g(x_j).

    For a covariance kernel this is the variance of the projection onto
    ``g``; it is the quadratic-form reading of the kernel/test-function
    contraction, distinct from :func:`kernel_l2_norm`.
    """
    _require_same_grid(k.grid, g.grid)
    wg = k.grid.weights * g.values
    return float(wg @ k.values @ wg)


def hs_operator_norm(k: Kernel) -> float:
    """Hilbert-Schmidt norm of the integral operator h -> ∫ K(., y) h(y) dy.

    For a kernel operator this coincides with the kernel's L2(mu x mu)
    norm, and the same quadrature sum is used; finiteness of this value is
    what qualifies the kernel as a Hilbert-Schmidt covariance.
    """
    return kernel_l2_norm(k)
