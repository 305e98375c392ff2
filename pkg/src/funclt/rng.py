"""Deterministic stream addressing for all Monte Carlo draws.

Every random quantity in this package is drawn from a Philox generator keyed
by ``SeedSequence(root_seed, spawn_key=path)``, where ``path`` is a short
tuple of small integers naming the consumer (stream kind, scenario indices,
replicate index, ...).  Streams with distinct paths are statistically
independent, and a stream's output depends only on (root_seed, path), never
on scheduling.  Parallel execution therefore only ever splits work along
path boundaries, which makes results bit-identical for any worker count.

Path layouts are documented where the draws happen; the kind tags below keep
unrelated consumers from colliding on a path prefix.
"""

from __future__ import annotations

import numpy as np

# Stream kind tags (first path entry).  Values are arbitrary but frozen:
# changing them changes every downstream draw.
ELEMENT = 1       # single-element coefficient draws, path (ELEMENT, n, m, rep)
COEFF_BLOCK = 2   # per-cell coefficient blocks, path (COEFF_BLOCK, n, m)
ROW = 3           # row-sum replicates, path (ROW, n, rep)
PATTERN = 4       # missingness patterns, path (PATTERN, n, m, rep) or (PATTERN, n, rep)
NOISE = 5         # imputation noise, path (NOISE, n, m, rep) or (NOISE, n, rep)
PAIRED = 6        # paired complete/partial row replicates, path (PAIRED, n, rep)
FUZZ = 7          # property-test fuzzing
NULL_BAND = 8     # simulated null distributions (internal fixed root)
TASK = 9          # experiment task roots, path (TASK, task_index)
WITNESS = 10      # missingness witness pairs

_MASK64 = (1 << 64) - 1


def substream(root_seed: int, *path: int) -> np.random.Generator:
    """Return the generator addressed by ``path`` under ``root_seed``.

    Parameters
    ----------
    root_seed : int
        Nonnegative root seed (taken mod 2**64).
    *path : int
        Stream address; integers may be any Python ints and are reduced
        mod 2**32 for the spawn key.

    Returns
    -------
    numpy.random.Generator
        Philox-backed generator; identical arguments give identical streams.
    """
    key = tuple(int(p) & 0xFFFFFFFF for p in path)
    ss = np.random.SeedSequence(int(root_seed) & _MASK64, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(root_seed: int, *path: int) -> int:
    """Collapse (root_seed, path) to a single reproducible 64-bit seed."""
    key = tuple(int(p) & 0xFFFFFFFF for p in path)
    ss = np.random.SeedSequence(int(root_seed) & _MASK64, spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])
