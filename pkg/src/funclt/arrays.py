"""Triangular arrays of independent random elements of discretized L2([0,1]).

Row n of an array has members m = 1..n, each a finite expansion

    chi_{n,m} = a(n,m) * sum_j Z_{m,j} basis_j

with independent mean-zero coefficients Z_{m,j} whose law may depend on
(m, j) but not on n; all n-dependence sits in the row scaling a(n,m).
Because the basis is orthonormal in the discrete inner product, norms and
projections of the elements reduce to coefficient arithmetic, which the
condition estimators exploit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .l2 import Grid, GridFunction, Kernel, inner_product
from .rng import COEFF_BLOCK, ELEMENT, substream

__all__ = [
    "CoefficientLaw",
    "ArraySpec",
    "Sample",
    "sqrt_row_scaling",
    "sample_element",
    "sample_coefficients",
    "analytic_covariance",
    "row_covariance_sum",
    "empirical_covariance",
    "empirical_covariance_report",
]

ORTHONORMALITY_TOL = 1e-8


@dataclass(frozen=True)
class CoefficientLaw:
    """Mean-zero scalar coefficient law with variance ``scale**2``.

    Kinds: ``gaussian``, ``uniform``, ``rademacher``, ``student-t`` (with
    ``nu > 2`` so the standardized variance exists), and
    ``point-mass-mixture`` (finitely many atoms with mean 0).  Use the
    classmethod constructors; the raw constructor does not validate
    mixture bookkeeping.
    """

    kind: str
    scale: float
    nu: float | None = None
    atoms: tuple[float, ...] | None = None
    probs: tuple[float, ...] | None = None

    # -- constructors ---------------------------------------------------

    @classmethod
    def gaussian(cls, scale: float = 1.0) -> "CoefficientLaw":
        return cls("gaussian", cls._check_scale(scale))

    @classmethod
    def uniform(cls, scale: float = 1.0) -> "CoefficientLaw":
        return cls("uniform", cls._check_scale(scale))

    @classmethod
    def rademacher(cls, scale: float = 1.0) -> "CoefficientLaw":
        return cls("rademacher", cls._check_scale(scale))

    @classmethod
    def student_t(cls, nu: float, scale: float = 1.0) -> "CoefficientLaw":
        if not nu > 2.0:
            raise ValueError("student-t law needs nu > 2 for a finite variance")
        return cls("student-t", cls._check_scale(scale), nu=float(nu))

    @classmethod
    def point_mass_mixture(
        cls, atoms: Sequence[float], probs: Sequence[float]
    ) -> "CoefficientLaw":
        a = tuple(float(v) for v in atoms)
        p = tuple(float(v) for v in probs)
        if len(a) == 0 or len(a) != len(p):
            raise ValueError("atoms and probs must be nonempty and equal length")
        if any(q < 0.0 for q in p) or abs(sum(p) - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")
        mean = sum(q * v for q, v in zip(p, a))
        if abs(mean) > 1e-12:
            raise ValueError(f"mixture must have mean 0, got {mean!r}")
        var = sum(q * v * v for q, v in zip(p, a))
        return cls("point-mass-mixture", math.sqrt(var), atoms=a, probs=p)

    @classmethod
    def zero(cls) -> "CoefficientLaw":
        return cls.point_mass_mixture((0.0,), (1.0,))

    @staticmethod
    def _check_scale(scale: float) -> float:
        scale = float(scale)
        if scale < 0.0 or not math.isfinite(scale):
            raise ValueError("scale must be finite and >= 0")
        return scale

    # -- moments ---------------------------------------------------------

    @property
    def variance(self) -> float:
        return self.scale * self.scale

    @property
    def is_gaussian(self) -> bool:
        return self.kind == "gaussian"

    def max_finite_moment(self) -> float:
        """Largest p with E|Z|^p < inf (inf for all laws but student-t)."""
        if self.kind == "student-t":
            return self.nu  # E|Z|^p finite iff p < nu
        return math.inf

    def bound(self) -> float | None:
        """Essential sup of |Z|, or None for unbounded laws."""
        if self.kind == "rademacher":
            return self.scale
        if self.kind == "uniform":
            return self.scale * math.sqrt(3.0)
        if self.kind == "point-mass-mixture":
            return max(abs(v) for v in self.atoms)
        return None

    def abs_moment(self, p: float) -> float:
        """E|Z|^p in closed form; ``inf`` when the moment diverges."""
        if p < 0.0:
            raise ValueError("p must be >= 0")
        if p == 0.0:
            return 1.0
        s = self.scale
        if self.kind == "gaussian":
            return s**p * 2.0 ** (p / 2.0) * math.gamma((p + 1.0) / 2.0) / math.sqrt(math.pi)
        if self.kind == "rademacher":
            return s**p
        if self.kind == "uniform":
            return (s * math.sqrt(3.0)) ** p / (p + 1.0)
        if self.kind == "point-mass-mixture":
            return sum(q * abs(v) ** p for q, v in zip(self.probs, self.atoms))
        if self.kind == "student-t":
            nu = self.nu
            if p >= nu:
                return math.inf
            raw = (
                nu ** (p / 2.0)
                * math.gamma((p + 1.0) / 2.0)
                * math.gamma((nu - p) / 2.0)
                / (math.sqrt(math.pi) * math.gamma(nu / 2.0))
            )
            return s**p * raw / (nu / (nu - 2.0)) ** (p / 2.0)
        raise ValueError(f"unknown law kind {self.kind!r}")

    # -- sampling / transforms --------------------------------------------

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "gaussian":
            return self.scale * rng.standard_normal(size)
        if self.kind == "uniform":
            half = self.scale * math.sqrt(3.0)
            return rng.uniform(-half, half, size)
        if self.kind == "rademacher":
            return self.scale * (2.0 * rng.integers(0, 2, size) - 1.0)
        if self.kind == "student-t":
            std = math.sqrt(self.nu / (self.nu - 2.0))
            return self.scale * rng.standard_t(self.nu, size) / std
        if self.kind == "point-mass-mixture":
            cum = np.cumsum(self.probs)
            cum[-1] = 1.0
            idx = np.searchsorted(cum, rng.random(size), side="right")
            return np.asarray(self.atoms, dtype=float)[idx]
        raise ValueError(f"unknown law kind {self.kind!r}")

    def cf(self, t: float) -> complex | None:
        """Characteristic function E exp(itZ), or None if no closed form."""
        if self.kind == "gaussian":
            return complex(math.exp(-0.5 * (self.scale * t) ** 2))
        if self.kind == "rademacher":
            return complex(math.cos(self.scale * t))
        if self.kind == "uniform":
            half = self.scale * math.sqrt(3.0)
            u = half * t
            return complex(1.0 if u == 0.0 else math.sin(u) / u)
        if self.kind == "point-mass-mixture":
            return sum(
                q * complex(math.cos(v * t), math.sin(v * t))
                for q, v in zip(self.probs, self.atoms)
            )
        return None


def sqrt_row_scaling(n: int, m: int) -> float:
    """Classical normalization a(n, m) = n**-0.5."""
    return 1.0 / math.sqrt(n)


@dataclass(frozen=True, eq=False)
class ArraySpec:
    """Declarative description of a triangular array.

    Parameters
    ----------
    grid : Grid
    basis : sequence of GridFunction
        Orthonormal family in the discrete inner product (checked to
        1e-8); defines the expansion space of every element.
    coeff_laws : callable (m, j) -> CoefficientLaw
        Law of Z_{m,j}; must not depend on n.
    row_scaling : callable (n, m) -> float
        Deterministic multiplier a(n, m); default n**-0.5.
    name : str
        Optional label used in reports.
    """

    grid: Grid
    basis: tuple[GridFunction, ...]
    coeff_laws: Callable[[int, int], CoefficientLaw]
    row_scaling: Callable[[int, int], float] = sqrt_row_scaling
    name: str = ""

    def __post_init__(self):
        basis = tuple(self.basis)
        if not basis:
            raise ValueError("basis must be nonempty")
        for b in basis:
            if not b.grid.matches(self.grid):
                raise ValueError("basis functions must live on the spec grid")
        mat = np.stack([b.values for b in basis])
        gram = (mat * self.grid.weights) @ mat.T
        if np.max(np.abs(gram - np.eye(len(basis)))) > ORTHONORMALITY_TOL:
            raise ValueError(
                f"basis is not orthonormal within {ORTHONORMALITY_TOL}"
            )
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "_basis_matrix", mat)
        object.__setattr__(self, "_group_cache", {})

    @property
    def basis_size(self) -> int:
        return len(self.basis)

    @property
    def basis_matrix(self) -> np.ndarray:
        """(J, G) array of basis values; rows are basis functions."""
        return self._basis_matrix

    def laws_for(self, m: int) -> tuple[CoefficientLaw, ...]:
        return tuple(self.coeff_laws(m, j) for j in range(self.basis_size))

    def variances_for(self, m: int) -> np.ndarray:
        return np.array([law.variance for law in self.laws_for(m)])

    def row_scale_vector(self, n: int) -> np.ndarray:
        return np.array([self.row_scaling(n, m) for m in range(1, n + 1)])

    def row_groups(self, n: int) -> list[tuple[tuple[CoefficientLaw, ...], np.ndarray]]:
        """Members 1..n grouped by identical law tuples.

        Returns a list of (laws, member_index_array) pairs in order of
        first appearance; member indices are zero-based (m - 1).  The
        grouping is cached per n.
        """
        if n < 1:
            raise ValueError("n must be >= 1")
        cached = self._group_cache.get(n)
        if cached is not None:
            return cached
        order: list[tuple[CoefficientLaw, ...]] = []
        members: dict[tuple[CoefficientLaw, ...], list[int]] = {}
        for m in range(1, n + 1):
            laws = self.laws_for(m)
            if laws not in members:
                members[laws] = []
                order.append(laws)
            members[laws].append(m - 1)
        groups = [(laws, np.array(members[laws], dtype=np.intp)) for laws in order]
        self._group_cache[n] = groups
        return groups

    def draw_row_coefficients(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw the unscaled coefficient matrix Z (n, J) for one replicate.

        Draw order is fixed (groups by first appearance, then j ascending,
        one vectorized draw per (group, j)) and is part of the determinism
        contract: any two callers passing generators in the same state get
        bit-identical matrices.
        """
        z = np.empty((n, self.basis_size))
        for laws, idx in self.row_groups(n):
            for j, law in enumerate(laws):
                z[idx, j] = law.sample(rng, idx.size)
        return z


@dataclass(frozen=True, eq=False)
class Sample:
    """One realized element chi_{n,m} with its RNG lineage."""

    element: GridFunction
    n: int
    m: int
    rep: int
    seed_path: tuple[int, ...]


def _check_cell(spec: ArraySpec, n: int, m: int) -> None:
    if n < 1:
        raise ValueError("n must be >= 1")
    if m < 1 or m > n:
        raise IndexError(f"member index m={m} outside row 1..{n}")


def sample_element(
    spec: ArraySpec, n: int, m: int, seed: int, rep: int = 0
) -> Sample:
    """Draw chi_{n,m} from its dedicated stream (ELEMENT, n, m, rep).

    Identical arguments give a bit-identical sample; distinct (m, rep)
    give independent streams.
    """
    _check_cell(spec, n, m)
    path = (ELEMENT, n, m, rep)
    rng = substream(seed, *path)
    laws = spec.laws_for(m)
    z = np.array([law.sample(rng, 1)[0] for law in laws])
    a = spec.row_scaling(n, m)
    values = a * (z @ spec.basis_matrix)
    return Sample(GridFunction(spec.grid, values), n, m, rep, (seed,) + path)


def sample_coefficients(
    spec: ArraySpec, n: int, m: int, reps: int, seed: int
) -> np.ndarray:
    """Draw ``reps`` independent unscaled coefficient vectors for cell (n, m).

    Uses the block stream (COEFF_BLOCK, n, m); column j is one vectorized
    draw, j ascending.  Returns (reps, J).
    """
    _check_cell(spec, n, m)
    if reps < 1:
        raise ValueError("reps must be >= 1")
    rng = substream(seed, COEFF_BLOCK, n, m)
    z = np.empty((reps, spec.basis_size))
    for j, law in enumerate(spec.laws_for(m)):
        z[:, j] = law.sample(rng, reps)
    return z


def analytic_covariance(spec: ArraySpec, n: int, m: int) -> Kernel:
    """Covariance kernel of chi_{n,m}: a^2 sum_j var_j basis_j ⊗ basis_j."""
    _check_cell(spec, n, m)
    a = spec.row_scaling(n, m)
    d = (a * a) * spec.variances_for(m)
    mat = spec.basis_matrix
    return Kernel(spec.grid, (mat.T * d) @ mat)


def row_covariance_sum(spec: ArraySpec, n: int) -> Kernel:
    """Sum over m = 1..n of the member covariances (row covariance)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    total = np.zeros(spec.basis_size)
    for laws, idx in spec.row_groups(n):
        var = np.array([law.variance for law in laws])
        a = np.array([spec.row_scaling(n, int(i) + 1) for i in idx])
        total += float(np.sum(a * a)) * var
    mat = spec.basis_matrix
    return Kernel(spec.grid, (mat.T * total) @ mat)


def _element_values_matrix(
    spec: ArraySpec, n: int, m: int, reps: int, seed: int, rep_start: int = 0
) -> np.ndarray:
    """(reps, G) element values drawn from per-rep streams (ELEMENT, n, m, rep).

    Shares streams with :func:`sample_element`, so row r equals the values
    of ``sample_element(spec, n, m, seed, rep=rep_start + r)`` bit for bit;
    a nonzero ``rep_start`` selects a disjoint, independent batch.
    """
    laws = spec.laws_for(m)
    a = spec.row_scaling(n, m)
    z = np.empty(spec.basis_size)
    values = np.empty((reps, spec.grid.size))
    for rep in range(reps):
        rng = substream(seed, ELEMENT, n, m, rep_start + rep)
        for j, law in enumerate(laws):
            z[j] = law.sample(rng, 1)[0]
        # one vector-matrix product per row, the exact op sample_element
        # performs, so the bit-identity promised above survives BLAS
        # differences between batched and single products
        values[rep] = a * (z @ spec.basis_matrix)
    return values


def empirical_covariance(
    spec: ArraySpec, n: int, m: int, reps: int, seed: int
) -> Kernel:
    """Monte Carlo covariance kernel of chi_{n,m} from ``reps`` draws.

    Draws come from the same per-replicate streams as
    :func:`sample_element`, which is what lets partially-observed
    pipelines pair with this estimate sample by sample.
    """
    kernel, _ = empirical_covariance_report(spec, n, m, reps, seed)
    return kernel


def empirical_covariance_report(
    spec: ArraySpec, n: int, m: int, reps: int, seed: int
) -> tuple[Kernel, float]:
    """Empirical covariance plus an aggregate Monte Carlo error bound.

    The bound is sqrt(sum_ij w_i w_j Var(chi_i chi_j) / reps) with the
    variances estimated from the run; it dominates the expected
    L2(mu x mu) distance between the estimate and its target.
    """
    _check_cell(spec, n, m)
    if reps < 2:
        raise ValueError("reps must be >= 2")
    values = _element_values_matrix(spec, n, m, reps, seed)
    return _covariance_from_values(spec.grid, values)


def _covariance_from_values(grid: Grid, values: np.ndarray) -> tuple[Kernel, float]:
    reps = values.shape[0]
    mean_xy = values.T @ values / reps
    sq = values * values
    mean_x2y2 = sq.T @ sq / reps
    var_xy = np.maximum(mean_x2y2 - mean_xy * mean_xy, 0.0)
    w = grid.weights
    stderr = float(np.sqrt((w @ var_xy @ w) / reps))
    return Kernel(grid, mean_xy), stderr


def projection_coefficients(spec: ArraySpec, g: GridFunction) -> np.ndarray:
    """Inner products <basis_j, g> as a (J,) vector."""
    return np.array([inner_product(b, g) for b in spec.basis])
