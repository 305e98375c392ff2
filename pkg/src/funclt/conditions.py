"""Monte Carlo functionals for the classical array CLT hypotheses.

The Lindeberg functional of row n is sum_m E[ ||chi_{n,m}||^2 ;
||chi_{n,m}|| > eps ], the Lyapunov functional is sum_m E ||chi||^{2+delta},
and both are estimated member by member from the coefficient
representation: for chi = a * sum_j Z_j basis_j the squared norm is
a^2 * Z' Gram Z with the (tiny) discrete Gram matrix of the basis, so no
grid-sized arrays enter the replicate loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .arrays import ArraySpec, row_covariance_sum, sample_coefficients
from .l2 import Kernel, kernel_l2_norm

__all__ = [
    "ConditionReport",
    "DominationCheck",
    "TrendReport",
    "lindeberg_functional",
    "lyapunov_functional",
    "lyapunov_dominates_lindeberg",
    "second_moment_sum",
    "covariance_sum_convergence",
    "condition_trend",
]

DOMINATION_SLACK = 1e-12


@dataclass(frozen=True)
class ConditionReport:
    """One estimated condition functional for one row."""

    kind: str
    n: int
    estimate: float
    stderr: float
    reps: int
    epsilon: float | None = None
    delta: float | None = None


class DominationCheck(NamedTuple):
    lindeberg: ConditionReport
    bound: float
    holds: bool


@dataclass(frozen=True)
class TrendReport:
    """Rank-based decay verdict over a sequence of condition reports.

    ``decreasing`` is True when the Kendall rank correlation between n and
    the estimates is negative with p < 0.01.  Perfect decay needs at least
    6 distinct n values to reach that significance, so shorter sequences
    can never be declared decreasing.
    """

    slope: float | None
    tau: float
    p_value: float
    decreasing: bool


def _basis_gram(spec: ArraySpec) -> np.ndarray:
    mat = spec.basis_matrix
    return (mat * spec.grid.weights) @ mat.T


def _squared_norms(z: np.ndarray, gram: np.ndarray, a: float) -> np.ndarray:
    """||a * sum_j z_j basis_j||^2 for each row of z."""
    return (a * a) * np.einsum("rj,jk,rk->r", z, gram, z)


def _member_scan(spec: ArraySpec, n: int, reps: int, seed: int):
    """Yield (m, a, squared_norms) for every member of row n."""
    gram = _basis_gram(spec)
    for m in range(1, n + 1):
        z = sample_coefficients(spec, n, m, reps, seed)
        a = spec.row_scaling(n, m)
        yield m, a, _squared_norms(z, gram, a)


def lindeberg_functional(
    spec: ArraySpec, n: int, epsilon: float, reps: int, seed: int
) -> ConditionReport:
    """Estimate sum_m E[ ||chi_{n,m}||^2 ; ||chi_{n,m}|| > epsilon ].

    Each member is averaged over ``reps`` draws from its block stream;
    the stderr aggregates the per-member sample variances.  For arrays
    with a uniform coefficient bound b the summand vanishes identically
    once n > J b^2 / epsilon^2, and the estimate is then exactly 0.0.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be > 0")
    if reps < 100:
        raise ValueError("reps must be >= 100")
    eps2 = epsilon * epsilon
    total = 0.0
    var_total = 0.0
    for _, _, s in _member_scan(spec, n, reps, seed):
        y = np.where(s > eps2, s, 0.0)
        total += float(y.mean())
        var_total += float(y.var()) / reps
    return ConditionReport(
        "lindeberg", n, total, math.sqrt(var_total), reps, epsilon=epsilon
    )


def lyapunov_functional(
    spec: ArraySpec, n: int, delta: float, reps: int, seed: int
) -> ConditionReport:
    """Estimate sum_m E ||chi_{n,m}||^{2+delta}."""
    if delta <= 0.0:
        raise ValueError("delta must be > 0")
    if reps < 2:
        raise ValueError("reps must be >= 2")
    power = 1.0 + delta / 2.0
    total = 0.0
    var_total = 0.0
    for _, _, s in _member_scan(spec, n, reps, seed):
        y = s**power
        total += float(y.mean())
        var_total += float(y.var()) / reps
    return ConditionReport(
        "lyapunov", n, total, math.sqrt(var_total), reps, delta=delta
    )


def lyapunov_dominates_lindeberg(
    spec: ArraySpec, n: int, epsilon: float, delta: float, reps: int, seed: int
) -> DominationCheck:
    """Check the pathwise bound ||x||^2 1{||x||>eps} <= ||x||^{2+delta}/eps^delta.

    Both functionals are evaluated on the same draws.  ``holds`` is True
    iff no sampled element violates the inequality by more than 1e-12;
    ``bound`` is the Lyapunov estimate divided by epsilon**delta, an upper
    bound for the Lindeberg estimate on the shared sample.
    """
    if epsilon <= 0.0 or delta <= 0.0:
        raise ValueError("epsilon and delta must be > 0")
    if reps < 100:
        raise ValueError("reps must be >= 100")
    eps2 = epsilon * epsilon
    power = 1.0 + delta / 2.0
    eps_pow = epsilon**delta
    lf_total = 0.0
    lf_var = 0.0
    bound_total = 0.0
    holds = True
    for _, _, s in _member_scan(spec, n, reps, seed):
        lf = np.where(s > eps2, s, 0.0)
        dom = s**power / eps_pow
        if np.any(lf > dom + DOMINATION_SLACK):
            holds = False
        lf_total += float(lf.mean())
        lf_var += float(lf.var()) / reps
        bound_total += float(dom.mean())
    report = ConditionReport(
        "lindeberg", n, lf_total, math.sqrt(lf_var), reps, epsilon=epsilon
    )
    return DominationCheck(report, bound_total, holds)


def second_moment_sum(
    spec: ArraySpec, n: int, reps: int, seed: int
) -> tuple[ConditionReport, float]:
    """Estimate sum_m E ||chi_{n,m}||^2 and return the analytic value.

    The analytic value is sum_m sum_j a(n,m)^2 var(Z_{m,j}); for a CLT
    scenario it should stay bounded away from 0 along n.
    """
    if reps < 100:
        raise ValueError("reps must be >= 100")
    total = 0.0
    var_total = 0.0
    for _, _, s in _member_scan(spec, n, reps, seed):
        total += float(s.mean())
        var_total += float(s.var()) / reps
    analytic = 0.0
    for laws, idx in spec.row_groups(n):
        var_sum = sum(law.variance for law in laws)
        a = np.array([spec.row_scaling(n, int(i) + 1) for i in idx])
        analytic += float(np.sum(a * a)) * var_sum
    report = ConditionReport("second-moment", n, total, math.sqrt(var_total), reps)
    return report, analytic


def covariance_sum_convergence(
    spec: ArraySpec, sigma: Kernel, n_list: Sequence[int]
) -> list[tuple[int, float]]:
    """L2(mu x mu) distance of each row covariance sum from ``sigma``.

    Pure kernel arithmetic (no sampling).  Whether the distances decay is
    for the caller to judge, e.g. via :func:`condition_trend`.
    """
    out = []
    for n in n_list:
        diff = row_covariance_sum(spec, n).values - sigma.values
        out.append((int(n), kernel_l2_norm(Kernel(spec.grid, diff))))
    return out


def condition_trend(points: Sequence[tuple[int, float]]) -> TrendReport:
    """Decide "decays with n" by a Kendall rank test at p < 0.01.

    ``points`` are (n, estimate) pairs.  The slope is an ordinary
    least-squares fit of log(estimate) on log(n) over the strictly
    positive estimates (None if fewer than 3); estimates that are exactly
    0 count as floor values for the rank test but cannot enter the fit.
    """
    if len(points) < 2:
        raise ValueError("need at least two points")
    ns = np.array([p[0] for p in points], dtype=float)
    est = np.array([p[1] for p in points], dtype=float)
    tau, p_value = stats.kendalltau(ns, est)
    tau = float(tau)
    p_value = float(p_value)
    pos = est > 0.0
    slope = None
    if int(pos.sum()) >= 3:
        coeffs = np.polyfit(np.log(ns[pos]), np.log(est[pos]), 1)
        slope = float(coeffs[0])
    decreasing = bool(tau < 0.0 and p_value < 0.01)
    return TrendReport(slope, tau, p_value, decreasing)
