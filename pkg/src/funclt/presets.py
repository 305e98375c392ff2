"""Built-in triangular-array scenarios with provable condition flags.

Each preset pins a coefficient-law layout whose Lindeberg / Lyapunov
behaviour follows from closed-form moments, so the registry can honestly
advertise which hypotheses hold.  Derivations are noted inline; the test
suite re-derives the checkable ones numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .arrays import ArraySpec, CoefficientLaw, sqrt_row_scaling
from .l2 import Kernel, fourier_basis, uniform_grid

__all__ = ["Scenario", "SCENARIOS", "get_scenario", "coefficient_bound"]

_ZERO = CoefficientLaw.zero()


@dataclass(frozen=True)
class IIDLaws:
    """Same law for every (m, j)."""

    law: CoefficientLaw

    def __call__(self, m: int, j: int) -> CoefficientLaw:
        return self.law


@dataclass(frozen=True)
class AlternatingScaleRademacher:
    """Rademacher coefficients whose scale alternates with the member index.

    Mean row variance is (hi^2 + lo^2) / 2 per basis direction, attained
    exactly at even n; keeping two distinct scales spreads the row-sum
    projections over O(n^2) atoms instead of a coarse lattice, which the
    distribution-distance checks need, while |Z| stays bounded by hi.
    """

    hi: float
    lo: float

    def __call__(self, m: int, j: int) -> CoefficientLaw:
        scale = self.hi if m % 2 == 1 else self.lo
        return CoefficientLaw.rademacher(scale)


@dataclass(frozen=True)
class FixedFirstMemberLaws:
    """Member 1 carries ``fixed`` on basis direction 0 only; every other
    member carries ``rest`` on directions j >= 1 only."""

    fixed: CoefficientLaw
    rest: CoefficientLaw

    def __call__(self, m: int, j: int) -> CoefficientLaw:
        if m == 1:
            return self.fixed if j == 0 else _ZERO
        return _ZERO if j == 0 else self.rest


@dataclass(frozen=True)
class UnitFirstMemberScaling:
    """a(n, 1) = 1; a(n, m) = n**-0.5 otherwise."""

    def __call__(self, n: int, m: int) -> float:
        return 1.0 if m == 1 else 1.0 / math.sqrt(n)


def coefficient_bound(spec: ArraySpec, n: int) -> float | None:
    """Uniform bound b on |Z_{m,j}| over row n, or None if unbounded."""
    worst = 0.0
    for laws, _ in spec.row_groups(n):
        for law in laws:
            b = law.bound()
            if b is None:
                return None
            worst = max(worst, b)
    return worst


@dataclass(frozen=True)
class Scenario:
    """A named array preset plus its provable hypothesis flags."""

    preset_id: str
    summary: str
    flags: dict[str, str]
    default_basis_size: int
    supports_imputation: bool
    _laws_factory: Callable[[], Callable[[int, int], CoefficientLaw]]
    _row_scaling: Callable[[int, int], float] = sqrt_row_scaling
    _sigma_kind: str = "identity"  # limit covariance structure

    def make_spec(
        self, grid_size: int = 256, basis_size: int | None = None
    ) -> ArraySpec:
        size = self.default_basis_size if basis_size is None else int(basis_size)
        grid = uniform_grid(int(grid_size))
        basis = fourier_basis(grid, size)
        return ArraySpec(
            grid=grid,
            basis=tuple(basis),
            coeff_laws=self._laws_factory(),
            row_scaling=self._row_scaling,
            name=self.preset_id,
        )

    def sigma_limit(self, spec: ArraySpec) -> Kernel:
        """Limit of the row covariance sums for this preset."""
        mat = spec.basis_matrix
        if self._sigma_kind == "identity":
            return Kernel(spec.grid, mat.T @ mat)
        raise ValueError(f"no closed-form limit for {self.preset_id!r}")


def _lf_pass_laws() -> Callable[[int, int], CoefficientLaw]:
    return AlternatingScaleRademacher(hi=math.sqrt(1.5), lo=math.sqrt(0.5))


def _lf_fail_laws() -> Callable[[int, int], CoefficientLaw]:
    return FixedFirstMemberLaws(
        fixed=CoefficientLaw.rademacher(1.0), rest=CoefficientLaw.rademacher(1.0)
    )


def _lyapunov_pass_laws() -> Callable[[int, int], CoefficientLaw]:
    return IIDLaws(CoefficientLaw.gaussian(1.0))


def _heavy_tail_laws() -> Callable[[int, int], CoefficientLaw]:
    return IIDLaws(CoefficientLaw.student_t(nu=2.5, scale=1.0))


SCENARIOS: dict[str, Scenario] = {
    # |Z| <= sqrt(1.5), so ||chi_{n,m}|| <= sqrt(1.5 J / n) deterministically
    # and the Lindeberg sum is exactly 0 once n > 1.5 J / eps^2; the
    # Lyapunov(1) sum is <= (1.5 J)^{3/2} / sqrt(n) -> 0.
    "lf-pass": Scenario(
        preset_id="lf-pass",
        summary="bounded Rademacher coefficients, two alternating scales, a = n**-0.5",
        flags={
            "lindeberg": "holds (norms bounded by sqrt(1.5 J / n))",
            "lyapunov(1)": "holds (bounded coefficients)",
        },
        default_basis_size=8,
        supports_imputation=False,
        _laws_factory=_lf_pass_laws,
    ),
    # Member 1 has ||chi_{n,1}|| = 1 for every n, so for eps < 1 its
    # Lindeberg summand is identically 1 and the sum cannot vanish; the
    # same member keeps E||chi||^3 = 1, so Lyapunov(1) fails too.
    "lf-fail": Scenario(
        preset_id="lf-fail",
        summary="one member with fixed unit norm on the constant direction",
        flags={
            "lindeberg": "fails (member 1 contributes 1 for eps < 1)",
            "lyapunov(1)": "fails (member 1 contributes 1)",
        },
        default_basis_size=8,
        supports_imputation=False,
        _laws_factory=_lf_fail_laws,
        _row_scaling=UnitFirstMemberScaling(),
    ),
    # Gaussian coefficients: E||chi||^3 = E||Z||_2^3 / n^{3/2} summed over
    # n members gives C / sqrt(n) -> 0, so Lyapunov(1) holds and
    # Lindeberg follows by domination.
    "lyapunov-pass": Scenario(
        preset_id="lyapunov-pass",
        summary="iid standard Gaussian coefficients, a = n**-0.5",
        flags={
            "lindeberg": "holds (dominated by Lyapunov)",
            "lyapunov(1)": "holds (Gaussian third moments)",
        },
        default_basis_size=8,
        supports_imputation=True,
        _laws_factory=_lyapunov_pass_laws,
    ),
    # Student-t with nu = 2.5: variance is finite so Lindeberg holds for
    # the iid n**-0.5 array (dominated convergence), but E|Z|^{2+delta}
    # is infinite for every delta >= 0.5, so Lyapunov(1) is unavailable.
    "heavy-tail": Scenario(
        preset_id="heavy-tail",
        summary="iid standardized Student-t (nu = 2.5) coefficients, a = n**-0.5",
        flags={
            "lindeberg": "holds (finite variance, iid scaling)",
            "lyapunov(1)": "fails (E|Z|^3 = inf for nu = 2.5)",
            "lyapunov(0.25)": "holds (E|Z|^2.25 < inf)",
        },
        default_basis_size=8,
        supports_imputation=False,
        _laws_factory=_heavy_tail_laws,
    ),
    # Two-dimensional Gaussian expansion used by the imputation audits;
    # same hypothesis profile as lyapunov-pass.
    "gaussian-j2": Scenario(
        preset_id="gaussian-j2",
        summary="iid standard Gaussian coefficients on 2 basis directions",
        flags={
            "lindeberg": "holds (dominated by Lyapunov)",
            "lyapunov(1)": "holds (Gaussian third moments)",
        },
        default_basis_size=2,
        supports_imputation=True,
        _laws_factory=_lyapunov_pass_laws,
    ),
}


def get_scenario(preset_id: str) -> Scenario:
    try:
        return SCENARIOS[preset_id]
    except KeyError:
        known = ", ".join(sorted(SCENARIOS))
        raise ValueError(f"unknown preset {preset_id!r}; known presets: {known}") from None
