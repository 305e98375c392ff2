"""Monte Carlo certification that row sums are asymptotically Gaussian.

The target law of a centered Gaussian element with covariance kernel
``sigma`` is pinned down by its characteristic functional
``g -> exp(-pairing(sigma, g) / 2)``.  Verification therefore proceeds
through one-dimensional projections onto a fixed family of test
functions: for each test function ``g`` the empirical characteristic
function of ``<g, S_n>`` is compared against the Gaussian target, the
standardized projection is compared against the standard normal via a
Kolmogorov-Smirnov statistic, and skewness / excess-kurtosis gaps are
reported.

KS statistics are judged against *simulated* null quantiles rather than
asymptotic formulas: the null law of the KS statistic of N samples is
distribution-free, so a table built once from uniform order statistics
(fixed internal stream, cached per N) applies to every comparison at
that sample size.

The partially-observed variant pairs a complete row sum S_n with the
recovered row sum S'_n built from the *same* element draws, so that a
mechanism observing everything reproduces the complete report bit for
bit and differences isolate the effect of missingness + recovery.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.special
import scipy.stats

from .arrays import ArraySpec
from .imputation import _check_noise_mode, impute_row_values, require_gaussian_row
from .l2 import Grid, GridFunction, Kernel, fourier_basis, inner_product, pairing
from .missingness import Mechanism, pattern_batch
from .rng import NOISE, NULL_BAND, PAIRED, PATTERN, ROW, substream

# Root seed of the internal null-quantile tables.  The tables are a fixed
# reference surface of the library, so this is a constant, not an input.
NULL_BAND_ROOT = 1
_NULL_CHUNK = 200
# Pairings this small cannot standardize a projection; the test function
# is skipped with a warning (it carries no variance in the target law).
DEGENERATE_VARIANCE = 1e-15
PAIRING_PSD_TOL = 1e-10


def normal_cdf(x: np.ndarray) -> np.ndarray:
    """Standard normal CDF (scipy's erf-based ``ndtr``)."""
    return scipy.special.ndtr(x)


def ks_statistic(samples: np.ndarray) -> float:
    """Kolmogorov-Smirnov distance between samples and the standard normal."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 1:
        raise ValueError("need at least one sample")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    cdf = normal_cdf(x)
    i = np.arange(1, n + 1)
    return float(np.maximum(i / n - cdf, cdf - (i - 1) / n).max())


@lru_cache(maxsize=None)
def ks_null_quantile(n_samples: int, q: float = 0.99, draws: int = 10_000) -> float:
    """Quantile of the null KS distribution at sample size ``n_samples``.

    Simulated from uniform order statistics (the null law is the same
    for every continuous reference distribution), in chunks to bound
    memory, from a fixed internal stream so the value is a reproducible
    constant for given (n_samples, q, draws).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not 0.0 < q < 1.0:
        raise ValueError("q must be in (0, 1)")
    if draws < 100:
        raise ValueError("draws must be >= 100")
    rng = substream(NULL_BAND_ROOT, NULL_BAND, n_samples)
    i = np.arange(1, n_samples + 1)
    stats = np.empty(draws)
    done = 0
    while done < draws:
        k = min(_NULL_CHUNK, draws - done)
        u = np.sort(rng.random((k, n_samples)), axis=1)
        d_plus = (i / n_samples - u).max(axis=1)
        d_minus = (u - (i - 1) / n_samples).max(axis=1)
        stats[done : done + k] = np.maximum(d_plus, d_minus)
        done += k
    return float(np.quantile(stats, q))


@dataclass(frozen=True)
class CharEstimate:
    """Monte Carlo estimate of a characteristic function value.

    ``stderr`` combines the real and imaginary component errors:
    sqrt((var(cos) + var(sin)) / reps).  Characteristic means always
    satisfy |value| <= 1, so |value| <= 1 + 4 stderr is enforced here.
    """

    value: complex
    stderr: float
    reps: int

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.stderr < 0 or not math.isfinite(self.stderr):
            raise ValueError("stderr must be finite and >= 0")
        if abs(self.value) > 1.0 + 4.0 * self.stderr + 1e-12:
            raise ValueError(
                "characteristic estimate has modulus "
                f"{abs(self.value)} > 1 + 4*stderr"
            )


def _cf_from_projections(proj: np.ndarray) -> CharEstimate:
    phases = np.exp(1j * proj)
    value = complex(phases.mean())
    stderr = float(np.sqrt((phases.real.var() + phases.imag.var()) / proj.size))
    return CharEstimate(value=value, stderr=stderr, reps=int(proj.size))


def empirical_cf(samples: Sequence[GridFunction], g: GridFunction) -> CharEstimate:
    """Empirical characteristic function E exp(i <g, s>) over samples."""
    if len(samples) < 2:
        raise ValueError("need at least 2 samples")
    proj = np.array([inner_product(g, s) for s in samples])
    return _cf_from_projections(proj)


def gaussian_target_cf(sigma: Kernel, g: GridFunction) -> complex:
    """Characteristic functional exp(-pairing(sigma, g)/2) of the Gaussian target."""
    p = pairing(sigma, g)
    if p < -PAIRING_PSD_TOL:
        raise ValueError(
            f"pairing(sigma, g) = {p} < 0: covariance kernel is not PSD"
        )
    return complex(math.exp(-0.5 * max(p, 0.0)))


def default_test_functions(grid: Grid) -> tuple[tuple[str, GridFunction], ...]:
    """The five canonical probes: constant plus the first two Fourier pairs."""
    labels = ("const", "sin1", "cos1", "sin2", "cos2")
    return tuple(zip(labels, fourier_basis(grid, 5)))


def _labeled(
    test_functions: Sequence,
) -> tuple[tuple[str, GridFunction], ...]:
    out = []
    for k, entry in enumerate(test_functions):
        if isinstance(entry, GridFunction):
            out.append((f"g{k}", entry))
        else:
            label, fn = entry
            out.append((str(label), fn))
    if not out:
        raise ValueError("need at least one test function")
    return tuple(out)


def row_sum_samples(
    spec: ArraySpec, n: int, reps: int, seed: int
) -> list[GridFunction]:
    """``reps`` independent draws of the row sum S_n = sum_m chi_{n,m}.

    Replicate r uses the dedicated stream (ROW, n, r); each draw sums n
    fresh independent elements via one coefficient matrix per replicate.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    a = spec.row_scale_vector(n)
    mat = spec.basis_matrix
    out = []
    for rep in range(reps):
        rng = substream(seed, ROW, n, rep)
        z = spec.draw_row_coefficients(n, rng)
        out.append(GridFunction(spec.grid, (a @ z) @ mat))
    return out


def row_sum_projections(
    spec: ArraySpec,
    n: int,
    test_functions: Sequence[GridFunction],
    reps: int,
    seed: int,
) -> np.ndarray:
    """(reps, K) matrix of projections <g_k, S_n> over independent row sums.

    Shares streams (ROW, n, rep) and the contraction order with
    :func:`row_sum_samples`, so projecting those samples with
    :func:`funclt.l2.inner_product` reproduces this matrix exactly: each
    row sum is materialized on the grid and contracted with w * g the
    same way inner_product does it, rather than through the (associative
    but not bit-equal) coefficient-space shortcut.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    w = spec.grid.weights
    probes = []
    for g in test_functions:
        if not g.grid.matches(spec.grid):
            raise ValueError("test functions must live on the spec grid")
        probes.append(w * g.values)
    a = spec.row_scale_vector(n)
    mat = spec.basis_matrix
    out = np.empty((reps, len(probes)))
    for rep in range(reps):
        rng = substream(seed, ROW, n, rep)
        z = spec.draw_row_coefficients(n, rng)
        vals = (a @ z) @ mat
        for k, wg in enumerate(probes):
            out[rep, k] = np.sum(wg * vals)
    return out


@dataclass(frozen=True)
class ProjectionCheck:
    """All normality diagnostics for one test function at one row size.

    ``cf_gap`` is |empirical cf - Gaussian target| at the probe g itself;
    ``cf_ok`` admits up to four standard errors.  ``ks_stat`` compares
    the projection standardized by its *target* scale against the
    standard normal; ``ks_ok`` means it sits inside the simulated null
    ``ks_quantile``.  ``skew_gap`` / ``kurtosis_gap`` are |skewness| and
    |excess kurtosis| of the standardized projection (0 for a Gaussian).
    """

    label: str
    target_variance: float
    cf_estimate: CharEstimate
    cf_target: complex
    cf_gap: float
    cf_ok: bool
    ks_stat: float
    ks_quantile: float
    ks_ok: bool
    skew_gap: float
    kurtosis_gap: float


@dataclass(frozen=True)
class NormalityReport:
    """Projection-based normality diagnostics for S_n at one n."""

    n: int
    reps: int
    checks: tuple[ProjectionCheck, ...]
    skipped: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return all(c.cf_ok and c.ks_ok for c in self.checks)

    def check(self, label: str) -> ProjectionCheck:
        for c in self.checks:
            if c.label == label:
                return c
        raise KeyError(f"no check labeled {label!r}")


def _projection_checks(
    projections: np.ndarray,
    labeled: tuple[tuple[str, GridFunction], ...],
    sigma: Kernel,
    q: float,
    null_draws: int,
) -> tuple[tuple[ProjectionCheck, ...], tuple[str, ...]]:
    reps = projections.shape[0]
    checks = []
    skipped = []
    for k, (label, g) in enumerate(labeled):
        var = pairing(sigma, g)
        if var < -PAIRING_PSD_TOL:
            raise ValueError(
                f"pairing(sigma, {label}) = {var} < 0: kernel is not PSD"
            )
        if var <= DEGENERATE_VARIANCE:
            warnings.warn(
                f"test function {label!r} has zero target variance; skipped",
                stacklevel=3,
            )
            skipped.append(label)
            continue
        proj = projections[:, k]
        est = _cf_from_projections(proj)
        target = complex(math.exp(-0.5 * var))
        gap = abs(est.value - target)
        std_proj = proj / math.sqrt(var)
        ks = ks_statistic(std_proj)
        band = ks_null_quantile(reps, q, null_draws)
        checks.append(
            ProjectionCheck(
                label=label,
                target_variance=float(var),
                cf_estimate=est,
                cf_target=target,
                cf_gap=float(gap),
                cf_ok=bool(gap <= 4.0 * est.stderr),
                ks_stat=ks,
                ks_quantile=band,
                ks_ok=bool(ks <= band),
                skew_gap=float(abs(scipy.stats.skew(std_proj))),
                kurtosis_gap=float(abs(scipy.stats.kurtosis(std_proj))),
            )
        )
    return tuple(checks), tuple(skipped)


def clt_verify(
    spec: ArraySpec,
    sigma: Kernel,
    n_list: Sequence[int],
    test_functions: Sequence | None = None,
    reps: int = 2000,
    seed: int = 0,
    q: float = 0.99,
    null_draws: int = 10_000,
) -> list[NormalityReport]:
    """Projection-based normality reports for S_n at each n in n_list.

    ``sigma`` is the covariance kernel of the Gaussian target (typically
    the limiting row-sum covariance).  Test functions with zero target
    variance are skipped with a warning.
    """
    if not n_list:
        raise ValueError("n_list must be nonempty")
    if reps < 2:
        raise ValueError("reps must be >= 2")
    labeled = _labeled(
        default_test_functions(spec.grid) if test_functions is None else test_functions
    )
    fns = [g for _, g in labeled]
    reports = []
    for n in n_list:
        projections = row_sum_projections(spec, n, fns, reps, seed)
        checks, skipped = _projection_checks(projections, labeled, sigma, q, null_draws)
        reports.append(
            NormalityReport(n=int(n), reps=reps, checks=checks, skipped=skipped)
        )
    return reports


@dataclass(frozen=True)
class CrossCfCheck:
    """Gap between the partial and complete empirical cf at one probe."""

    label: str
    gap: float
    stderr: float

    @property
    def ok(self) -> bool:
        return self.gap <= 4.0 * self.stderr


@dataclass(frozen=True)
class PairedLindeberg:
    """Truncated-second-moment sums on recovered vs complete rows.

    Both estimates average sum_m ||chi_{n,m}||^2 1{||chi_{n,m}|| > eps}
    over shared element draws; ``ok`` requires the two means to agree
    within four combined standard errors.  ``diff_stderr`` is the sharper
    paired estimate of the difference's own error, kept for diagnostics.
    """

    n: int
    epsilon: float
    complete_estimate: float
    complete_stderr: float
    partial_estimate: float
    partial_stderr: float
    diff: float
    diff_stderr: float

    @property
    def ok(self) -> bool:
        return self.diff <= 4.0 * math.hypot(self.complete_stderr, self.partial_stderr)


@dataclass(frozen=True)
class PairedNormalityReport:
    """Complete vs partially-observed verification with shared element seeds.

    ``complete[i]`` and ``partial[i]`` are the reports at ``n_list[i]``;
    ``cross[i]`` holds |cf_partial(g) - cf_complete(g)| checks, and
    ``lindeberg[i]`` the paired truncated-moment comparison.  ``passed``
    requires every cross check and every paired comparison to hold; it
    does not re-assert the sub-reports, which carry their own verdicts.
    """

    mechanism_kind: str
    noise_mode: str
    reps: int
    complete: tuple[NormalityReport, ...]
    partial: tuple[NormalityReport, ...]
    cross: tuple[tuple[CrossCfCheck, ...], ...]
    lindeberg: tuple[PairedLindeberg, ...]

    @property
    def passed(self) -> bool:
        cross_ok = all(c.ok for group in self.cross for c in group)
        return cross_ok and all(p.ok for p in self.lindeberg)


def partial_clt_verify(
    spec: ArraySpec,
    mechanism: Mechanism,
    sigma: Kernel,
    n_list: Sequence[int],
    test_functions: Sequence | None = None,
    reps: int = 2000,
    seed: int = 0,
    noise_mode: str = "conditional",
    lf_epsilon: float = 0.1,
    q: float = 0.99,
    null_draws: int = 10_000,
) -> PairedNormalityReport:
    """Run the normality verification on S_n and on the recovered S'_n.

    For each replicate the complete row (stream (PAIRED, n, rep)) is
    masked by the mechanism (stream (PATTERN, n, rep)) and recovered
    with conditional-Gaussian draws (stream (NOISE, n, rep)); complete
    and partial statistics therefore share every element draw.  A
    mechanism that observes everything makes the two reports identical.
    Requires Gaussian coefficient laws (the recovery's validity domain).
    """
    _check_noise_mode(noise_mode)
    if not n_list:
        raise ValueError("n_list must be nonempty")
    if reps < 2:
        raise ValueError("reps must be >= 2")
    if lf_epsilon <= 0:
        raise ValueError("lf_epsilon must be > 0")
    labeled = _labeled(
        default_test_functions(spec.grid) if test_functions is None else test_functions
    )
    probe_matrix = np.stack(
        [g.values * spec.grid.weights for _, g in labeled]
    )  # (K, G); row k dotted with values gives <g_k, .>
    w = spec.grid.weights
    mat = spec.basis_matrix
    j = spec.basis_size
    eps_sq = lf_epsilon * lf_epsilon
    complete_reports = []
    partial_reports = []
    cross_groups = []
    lindeberg = []
    for n in n_list:
        require_gaussian_row(spec, n)
        a = spec.row_scale_vector(n)
        k_fns = probe_matrix.shape[0]
        proj_c = np.empty((reps, k_fns))
        proj_p = np.empty((reps, k_fns))
        lf_c = np.empty(reps)
        lf_p = np.empty(reps)
        for rep in range(reps):
            rng = substream(seed, PAIRED, n, rep)
            z = spec.draw_row_coefficients(n, rng)
            values = (a[:, None] * z) @ mat
            pattern_rng = substream(seed, PATTERN, n, rep)
            masks = pattern_batch(mechanism, values, pattern_rng)
            noise = substream(seed, NOISE, n, rep).standard_normal((n, j))
            assembled = impute_row_values(spec, n, masks, values, noise, noise_mode)
            proj_c[rep] = probe_matrix @ values.sum(axis=0)
            proj_p[rep] = probe_matrix @ assembled.sum(axis=0)
            sq_c = (values * values) @ w
            sq_p = (assembled * assembled) @ w
            lf_c[rep] = sq_c[sq_c > eps_sq].sum()
            lf_p[rep] = sq_p[sq_p > eps_sq].sum()
        checks_c, skipped = _projection_checks(proj_c, labeled, sigma, q, null_draws)
        checks_p, _ = _projection_checks(proj_p, labeled, sigma, q, null_draws)
        complete_reports.append(
            NormalityReport(n=int(n), reps=reps, checks=checks_c, skipped=skipped)
        )
        partial_reports.append(
            NormalityReport(n=int(n), reps=reps, checks=checks_p, skipped=skipped)
        )
        cross_groups.append(
            tuple(
                CrossCfCheck(
                    label=cc.label,
                    gap=abs(cp.cf_estimate.value - cc.cf_estimate.value),
                    stderr=math.hypot(cc.cf_estimate.stderr, cp.cf_estimate.stderr),
                )
                for cc, cp in zip(checks_c, checks_p)
            )
        )
        se_c = float(np.sqrt(lf_c.var() / reps))
        se_p = float(np.sqrt(lf_p.var() / reps))
        lindeberg.append(
            PairedLindeberg(
                n=int(n),
                epsilon=float(lf_epsilon),
                complete_estimate=float(lf_c.mean()),
                complete_stderr=se_c,
                partial_estimate=float(lf_p.mean()),
                partial_stderr=se_p,
                diff=float(abs(lf_p.mean() - lf_c.mean())),
                diff_stderr=float(np.sqrt((lf_p - lf_c).var() / reps)),
            )
        )
    return PairedNormalityReport(
        mechanism_kind=mechanism.kind,
        noise_mode=noise_mode,
        reps=reps,
        complete=tuple(complete_reports),
        partial=tuple(partial_reports),
        cross=tuple(cross_groups),
        lindeberg=tuple(lindeberg),
    )
