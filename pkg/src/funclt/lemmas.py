"""Deterministic inequalities and limits used by the normality framework.

Three families of checkable facts live here:

* complex product limits — if row sums c_{n,m} satisfy
  max_m |c_{n,m}| -> 0 and sum_m c_{n,m} -> lambda with bounded
  absolute sums, then prod_m (1 + c_{n,m}) -> e^lambda;
* a telescoping bound — for complex numbers of modulus at most theta,
  |prod z_m - prod w_m| <= theta^(n-1) * sum |z_m - w_m|;
* Taylor control of e^{ix} — the remainder after the order-k partial
  sum is at most min(|x|^{k+1}/(k+1)!, 2 |x|^k / k!).

Everything is vectorized so property-based sweeps stay cheap, and each
check returns the two sides of its inequality so callers can assert
with explicit slack instead of a hidden tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arrays import ArraySpec, sample_coefficients
from .l2 import GridFunction, inner_product

MODULUS_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class ComplexSeq:
    """A finite complex sequence with a declared modulus bound.

    The bound is validated at construction: every entry must satisfy
    ``|v| <= modulus_bound + 1e-12``.
    """

    values: np.ndarray
    modulus_bound: float

    def __init__(self, values, modulus_bound: float):
        arr = np.asarray(values, dtype=complex)
        if arr.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
            raise ValueError("values must be finite")
        bound = float(modulus_bound)
        if bound < 0:
            raise ValueError("modulus_bound must be nonnegative")
        mods = np.abs(arr)
        if arr.size and float(mods.max()) > bound + MODULUS_SLACK:
            raise ValueError(
                f"declared modulus bound {bound} violated: max |v| = {mods.max()}"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "modulus_bound", bound)

    @property
    def size(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class ProductRowDiagnostics:
    """Per-row diagnostics for the product limit prod (1 + c_m) -> e^lambda."""

    n: int
    max_abs: float
    total: complex
    abs_total: float
    product: complex
    target: complex
    error: float


def product_limit_check(
    rows: dict[int, np.ndarray], lam: complex
) -> list[ProductRowDiagnostics]:
    """Diagnostics for each row of a triangular scheme of complex numbers.

    ``rows`` maps n to the row's entries c_{n,1..k_n}.  For each row the
    result records max_m |c_{n,m}|, sum_m c_{n,m}, sum_m |c_{n,m}|, the
    product prod_m (1 + c_{n,m}), and its distance to e^lambda.  Callers
    assert that max_abs and |total - lambda| shrink and that error does
    too; this function only measures.
    """
    lam = complex(lam)
    target = np.exp(lam)
    out = []
    for n in sorted(rows):
        row = np.asarray(rows[n], dtype=complex)
        if row.ndim != 1:
            raise ValueError("each row must be one-dimensional")
        product = complex(np.prod(1.0 + row)) if row.size else 1.0 + 0.0j
        out.append(
            ProductRowDiagnostics(
                n=int(n),
                max_abs=float(np.abs(row).max()) if row.size else 0.0,
                total=complex(row.sum()),
                abs_total=float(np.abs(row).sum()),
                product=product,
                target=target,
                error=float(abs(product - target)),
            )
        )
    return out


@dataclass(frozen=True)
class BoundCheck:
    """One verified inequality: ``lhs <= rhs + slack`` iff ``holds``."""

    lhs: float
    rhs: float
    slack: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + self.slack


def complex_product_bound(z: ComplexSeq, w: ComplexSeq) -> BoundCheck:
    """Telescoping bound |prod z - prod w| <= theta^(n-1) sum |z_m - w_m|.

    ``theta`` is the larger of the two declared modulus bounds.  The two
    sequences must have equal length; the bound is vacuous (0 <= 0) for
    empty sequences.
    """
    if z.size != w.size:
        raise ValueError("sequences must have equal length")
    n = z.size
    if n == 0:
        return BoundCheck(lhs=0.0, rhs=0.0, slack=MODULUS_SLACK)
    theta = max(z.modulus_bound, w.modulus_bound)
    lhs = float(abs(np.prod(z.values) - np.prod(w.values)))
    rhs = float(theta ** (n - 1) * np.abs(z.values - w.values).sum())
    return BoundCheck(lhs=lhs, rhs=rhs, slack=MODULUS_SLACK)


def taylor_partial_sum(x: np.ndarray, order: int) -> np.ndarray:
    """Partial sum sum_{m=0}^{order} (ix)^m / m! of exp(ix), elementwise."""
    if order < 0:
        raise ValueError("order must be >= 0")
    x = np.asarray(x, dtype=float)
    total = np.ones(x.shape, dtype=complex)
    term = np.ones(x.shape, dtype=complex)
    for m in range(1, order + 1):
        term = term * (1j * x) / m
        total = total + term
    return total


def taylor_remainder_bound(x: np.ndarray, order: int) -> BoundCheck:
    """Check |e^{ix} - partial sum| <= min(|x|^{k+1}/(k+1)!, 2|x|^k/k!).

    Vectorized over ``x``; the reported ``lhs``/``rhs`` are from the
    element with the smallest margin, so a passing check certifies every
    element.  The slack is the absolute 1e-12 of the contract: a fixed
    floor rather than a relative one, because near x = 0 both sides sit
    at roundoff scale and a relative slack would flag pure cancellation
    noise in ``exp(ix) - partial`` as a violation.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    partial = taylor_partial_sum(x, order)
    lhs = np.abs(np.exp(1j * x) - partial)
    ax = np.abs(x)
    k = order
    rhs = np.minimum(
        ax ** (k + 1) / math.factorial(k + 1),
        2.0 * ax**k / math.factorial(k),
    )
    margin = rhs - lhs
    if margin.size == 0:
        return BoundCheck(lhs=0.0, rhs=0.0, slack=0.0)
    worst = int(np.argmin(margin))
    lhs_w = float(lhs.flat[worst])
    rhs_w = float(rhs.flat[worst])
    return BoundCheck(lhs=lhs_w, rhs=rhs_w, slack=MODULUS_SLACK)


@dataclass(frozen=True)
class ExpansionPoint:
    """Characteristic-function expansion diagnostics at one argument t.

    ``phi_mc`` is the Monte Carlo characteristic function of the
    projection <chi_{n,m}, psi>;  ``residual_mc = |phi_mc - (1 - t^2
    sigma^2 / 2)|`` with the analytic projection variance sigma^2.
    When every coefficient law has a closed-form characteristic
    function, ``phi_closed``/``residual_closed`` hold the exact values
    (otherwise None).  ``ratio_*`` divides the residual by t^2 so a
    o(t^2) residual shows up as a vanishing ratio.
    """

    t: float
    phi_mc: complex
    residual_mc: float
    ratio_mc: float
    phi_closed: complex | None
    residual_closed: float | None
    ratio_closed: float | None


def char_expansion_residual(
    spec: ArraySpec,
    n: int,
    m: int,
    psi: GridFunction,
    reps: int,
    seed: int,
    t_list: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025),
) -> list[ExpansionPoint]:
    """Second-order expansion of the projection characteristic function.

    For X = <chi_{n,m}, psi> with mean zero and variance sigma^2 the
    characteristic function satisfies phi(t) = 1 - t^2 sigma^2 / 2 +
    o(t^2).  This estimates phi by Monte Carlo (streams shared with
    :func:`funclt.arrays.sample_coefficients`) and, for laws with a
    closed-form characteristic function, computes phi exactly as the
    product over independent coefficients.
    """
    if reps < 2:
        raise ValueError("reps must be >= 2")
    if any(t <= 0 for t in t_list):
        raise ValueError("t values must be positive")
    laws = spec.laws_for(m)
    a = spec.row_scaling(n, m)
    coords = np.array([inner_product(b, psi) for b in spec.basis])
    z = sample_coefficients(spec, n, m, reps, seed)
    projections = a * (z @ coords)
    sigma_sq = float(a * a * sum(law.variance * c * c for law, c in zip(laws, coords)))
    closed_available = all(law.cf(0.0) is not None for law in laws)
    out = []
    for t in t_list:
        phi_mc = complex(np.mean(np.exp(1j * t * projections)))
        quad = 1.0 - 0.5 * t * t * sigma_sq
        residual_mc = float(abs(phi_mc - quad))
        if closed_available:
            phi_closed = complex(
                np.prod([law.cf(t * a * c) for law, c in zip(laws, coords)])
            )
            residual_closed = float(abs(phi_closed - quad))
            ratio_closed = residual_closed / (t * t)
        else:
            phi_closed = None
            residual_closed = None
            ratio_closed = None
        out.append(
            ExpansionPoint(
                t=float(t),
                phi_mc=phi_mc,
                residual_mc=residual_mc,
                ratio_mc=residual_mc / (t * t),
                phi_closed=phi_closed,
                residual_closed=residual_closed,
                ratio_closed=ratio_closed,
            )
        )
    return out
