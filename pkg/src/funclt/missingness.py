"""Missingness patterns and mechanisms over grid-valued elements.

A pattern marks each grid point observed (True) or missing (False).  The
shipped mechanism kinds are missing-completely-at-random (Bernoulli or one
contiguous interval) and a missing-at-random threshold rule that reads only
a fixed always-observed probe prefix: the decision function structurally
receives nothing but the probe values, so it cannot depend on data it
deletes.  A value-peeking kind useful as a negative control cannot be built
through the public constructors; tests reach it via the module-private
class below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arrays import ArraySpec
from .gauss import cholesky_batch, coefficient_posterior, coefficient_ridge
from .l2 import Grid, GridFunction
from .rng import WITNESS, PATTERN, substream

__all__ = [
    "MissingnessPattern",
    "Mechanism",
    "SplitElement",
    "WitnessReport",
    "ConditioningError",
    "mcar_bernoulli",
    "mcar_interval",
    "mar_threshold",
    "sample_pattern",
    "split",
    "reassemble",
    "mar_witness_test",
]

_MECHANISM_KINDS = ("mcar-bernoulli", "mcar-interval", "mar-threshold")


class ConditioningError(RuntimeError):
    """Raised when no element pairs agreeing on the observed part are found."""


@dataclass(frozen=True, eq=False)
class MissingnessPattern:
    """Boolean observation mask aligned to a grid (True = observed)."""

    grid: Grid
    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool, copy=True)
        if mask.shape != (self.grid.size,):
            raise ValueError(
                f"mask must have shape ({self.grid.size},), got {mask.shape}"
            )
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def observed_indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @property
    def missing_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.mask)

    @property
    def n_observed(self) -> int:
        return int(self.mask.sum())

    def same_pattern(self, other: "MissingnessPattern") -> bool:
        return self.grid.matches(other.grid) and np.array_equal(self.mask, other.mask)


@dataclass(frozen=True)
class Mechanism:
    """Declarative missingness mechanism.

    Use the classmethod constructors; direct construction rejects unknown
    kinds, which is what keeps value-peeking rules out of the public API.
    """

    kind: str
    p: float | None = None
    length: float | None = None
    probe_count: int | None = None
    threshold: float | None = None
    miss_frac: float | None = None
    alt_frac: float | None = None

    def __post_init__(self):
        if self.kind not in _MECHANISM_KINDS:
            raise ValueError(
                f"unknown mechanism kind {self.kind!r}; "
                f"allowed kinds: {', '.join(_MECHANISM_KINDS)}"
            )

    @classmethod
    def mcar_bernoulli(cls, p: float) -> "Mechanism":
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must be in [0, 1]")
        return cls("mcar-bernoulli", p=float(p))

    @classmethod
    def mcar_interval(cls, length: float) -> "Mechanism":
        if not 0.0 <= length <= 1.0:
            raise ValueError("length must be in [0, 1]")
        return cls("mcar-interval", length=float(length))

    @classmethod
    def mar_threshold(
        cls,
        probe_count: int = 8,
        threshold: float = 0.0,
        miss_frac: float = 0.3,
        alt_frac: float = 0.1,
    ) -> "Mechanism":
        if probe_count < 1:
            raise ValueError("probe_count must be >= 1")
        if not (0.0 <= miss_frac <= 1.0 and 0.0 <= alt_frac <= 1.0):
            raise ValueError("miss_frac and alt_frac must be in [0, 1]")
        return cls(
            "mar-threshold",
            probe_count=int(probe_count),
            threshold=float(threshold),
            miss_frac=float(miss_frac),
            alt_frac=float(alt_frac),
        )

    @property
    def is_mar_only(self) -> bool:
        """True when the pattern law depends on (observed) element values."""
        return self.kind == "mar-threshold"


# Module-level factory aliases; the classmethods carry the validation.
mcar_bernoulli = Mechanism.mcar_bernoulli
mcar_interval = Mechanism.mcar_interval
mar_threshold = Mechanism.mar_threshold


@dataclass(frozen=True)
class _ValuePeekMechanism:
    """Negative control: deletes a block based on a value inside that block.

    Not missing-at-random, and deliberately impossible to build through
    :class:`Mechanism`; only the witness-test suite should instantiate it.
    """

    threshold: float = 0.0
    miss_frac: float = 0.3

    kind = "value-peek"


def pattern_batch(
    mech, values: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Draw one pattern mask per row of ``values``; returns bool (R, G).

    MAR rules see only the probe prefix of each row; MCAR kinds ignore the
    values entirely (their masks are a pure function of the stream), which
    is what makes common-random-number witness comparisons exact.
    """
    r, g = values.shape
    if mech.kind == "mcar-bernoulli":
        return rng.random((r, g)) < mech.p
    if mech.kind == "mcar-interval":
        size = round(mech.length * g)
        mask = np.ones((r, g), dtype=bool)
        if size > 0:
            starts = rng.integers(0, g - size + 1, r)
            cols = starts[:, None] + np.arange(size)[None, :]
            mask[np.arange(r)[:, None], cols] = False
        return mask
    if mech.kind == "mar-threshold":
        k = min(mech.probe_count, g)
        probe_mean = values[:, :k].mean(axis=1)
        frac = np.where(probe_mean > mech.threshold, mech.miss_frac, mech.alt_frac)
        sizes = np.minimum(np.round(frac * g).astype(int), g - k)
        mask = np.ones((r, g), dtype=bool)
        cols = np.arange(g)[None, :]
        block = (cols >= k) & (cols < (k + sizes)[:, None])
        mask[block] = False
        return mask
    if mech.kind == "value-peek":
        size = max(round(mech.miss_frac * values.shape[1]), 1)
        peek = values[:, -1]
        mask = np.ones((r, g), dtype=bool)
        mask[peek > mech.threshold, g - size :] = False
        return mask
    raise ValueError(f"unknown mechanism kind {mech.kind!r}")


def sample_pattern(
    mech, element: GridFunction, seed: int, rep: int = 0
) -> MissingnessPattern:
    """Draw one missingness pattern from the stream (PATTERN, rep)."""
    rng = substream(seed, PATTERN, rep)
    mask = pattern_batch(mech, element.values[None, :], rng)[0]
    return MissingnessPattern(element.grid, mask)


@dataclass(frozen=True, eq=False)
class SplitElement:
    """Observed part of an element plus the missing index set."""

    grid: Grid
    observed_indices: np.ndarray
    observed_values: np.ndarray
    missing_indices: np.ndarray


def split(element: GridFunction, pattern: MissingnessPattern) -> SplitElement:
    """Split an element into its observed part and missing index set."""
    if not element.grid.matches(pattern.grid):
        raise ValueError("element and pattern live on different grids")
    obs = pattern.observed_indices
    return SplitElement(
        element.grid, obs, element.values[obs].copy(), pattern.missing_indices
    )


def reassemble(part: SplitElement, missing_values: np.ndarray) -> GridFunction:
    """Inverse of :func:`split`: observed values are restored verbatim."""
    missing_values = np.asarray(missing_values, dtype=float)
    if missing_values.shape != part.missing_indices.shape:
        raise ValueError("missing_values length must match the missing index set")
    values = np.empty(part.grid.size)
    values[part.observed_indices] = part.observed_values
    values[part.missing_indices] = missing_values
    return GridFunction(part.grid, values)


@dataclass(frozen=True)
class WitnessReport:
    """Outcome of the missing-at-random witness comparison."""

    max_discrepancy: float
    mean_discrepancy: float
    stderr: float
    pairs: int
    pattern_draws: int
    passed: bool


def _conditional_pair(
    spec: ArraySpec,
    n: int,
    m: int,
    pattern: MissingnessPattern,
    z1: np.ndarray,
    rng: np.random.Generator,
    budget: int,
) -> np.ndarray:
    """Second element agreeing with the first on observed points; (G,) values."""
    laws = spec.laws_for(m)
    a = spec.row_scaling(n, m)
    v1 = a * (z1 @ spec.basis_matrix)
    obs = pattern.observed_indices
    if all(law.is_gaussian for law in laws):
        # Exact conditional resample: keep the observed values verbatim and
        # draw the missing block from the coefficient-space posterior.
        var = np.array([law.variance for law in laws]) * (a * a)
        active = var > 0.0
        out = v1.copy()
        miss = pattern.missing_indices
        if miss.size == 0 or not np.any(active):
            return out
        bmat = spec.basis_matrix[active]
        lam = coefficient_ridge(bmat, var[active])
        mean, cov = coefficient_posterior(bmat[:, obs], var[active], v1[obs], lam)
        draw = mean + cholesky_batch(cov[None])[0] @ rng.standard_normal(
            int(active.sum())
        )
        out[miss] = draw @ bmat[:, miss]
        return out
    # Rejection: redraw until the observed sub-vectors match exactly.
    for _ in range(budget):
        z2 = np.array([law.sample(rng, 1)[0] for law in laws])
        v2 = a * (z2 @ spec.basis_matrix)
        if np.array_equal(v2[obs], v1[obs]):
            return v2
    raise ConditioningError(
        f"no agreeing pair found in {budget} draws; "
        "exact conditioning needs Gaussian coefficient laws"
    )


def mar_witness_test(
    mech,
    spec: ArraySpec,
    n: int,
    m: int,
    pattern: MissingnessPattern,
    reps: int,
    seed: int,
    pattern_draws: int = 4,
    budget: int = 2000,
) -> WitnessReport:
    """Estimate sup |P(pattern | w1) - P(pattern | w2)| over agreeing pairs.

    For each of ``reps`` pairs the two elements agree exactly on the
    observed part of ``pattern``; each element's probability of producing
    ``pattern`` is estimated from ``pattern_draws`` mechanism draws using
    common random numbers, so mechanisms whose pattern law depends only on
    the observed part give discrepancy exactly 0.  ``passed`` is True iff
    the largest discrepancy is within 4 binomial standard errors.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    laws = spec.laws_for(m)
    a = spec.row_scaling(n, m)
    target = pattern.mask
    discrepancies = np.empty(reps)
    worst_var = 0.0
    for i in range(reps):
        rng_elem = substream(seed, WITNESS, 0, i)
        z1 = np.array([law.sample(rng_elem, 1)[0] for law in laws])
        v1 = a * (z1 @ spec.basis_matrix)
        rng_pair = substream(seed, WITNESS, 1, i)
        v2 = _conditional_pair(spec, n, m, pattern, z1, rng_pair, budget)
        hits1 = 0
        hits2 = 0
        for k in range(pattern_draws):
            mask1 = pattern_batch(
                mech, v1[None, :], substream(seed, WITNESS, 2, i, k)
            )[0]
            mask2 = pattern_batch(
                mech, v2[None, :], substream(seed, WITNESS, 2, i, k)
            )[0]
            hits1 += int(np.array_equal(mask1, target))
            hits2 += int(np.array_equal(mask2, target))
        p1 = hits1 / pattern_draws
        p2 = hits2 / pattern_draws
        discrepancies[i] = abs(p1 - p2)
        worst_var = max(worst_var, (p1 * (1 - p1) + p2 * (1 - p2)) / pattern_draws)
    stderr = math.sqrt(worst_var)
    max_disc = float(discrepancies.max())
    return WitnessReport(
        max_discrepancy=max_disc,
        mean_discrepancy=float(discrepancies.mean()),
        stderr=stderr,
        pairs=reps,
        pattern_draws=pattern_draws,
        passed=bool(max_disc <= 4.0 * stderr),
    )
