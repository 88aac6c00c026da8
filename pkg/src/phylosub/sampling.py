"""Per-generation assignment of training cases to individuals."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Set

import numba
import numpy as np

from .phylo import Phylogeny

FULL = "full"
DOWN_SAMPLE = "down-sample"
DOWN_SAMPLE_EST = "down-sample-est"
IRS = "irs"
ABS = "abs"

REGIMES = (FULL, DOWN_SAMPLE, DOWN_SAMPLE_EST, IRS, ABS)
SHARED_SAMPLE_REGIMES = (FULL, DOWN_SAMPLE, DOWN_SAMPLE_EST)
ESTIMATING_REGIMES = (DOWN_SAMPLE_EST, IRS, ABS)


def sample_size(rate: float, num_cases: int) -> int:
    """Cases evaluated per individual per generation: round(rate * num_cases), at least 1."""
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"subsample rate must be in (0, 1], got {rate}")
    return max(1, int(round(rate * num_cases)))


@dataclass
class SampleAssignment:
    """Row i of ``cases`` holds the sorted case ids assigned to individual i."""

    cases: np.ndarray
    shared: bool = False

    @property
    def per_individual(self) -> List[Set[int]]:
        return [set(row.tolist()) for row in self.cases]

    @property
    def size(self) -> int:
        return self.cases.shape[1]

    def __len__(self) -> int:
        return self.cases.shape[0]


def _check(num_cases: int, S: int) -> None:
    if not 1 <= S <= num_cases:
        raise ValueError(f"sample size {S} outside [1, {num_cases}]")


def sample_full(num_cases: int, pop_size: int) -> SampleAssignment:
    cases = np.broadcast_to(np.arange(num_cases), (pop_size, num_cases)).copy()
    return SampleAssignment(cases, shared=True)


def sample_down(num_cases: int, S: int, pop_size: int, rng: np.random.Generator) -> SampleAssignment:
    """One uniform random S-subset, shared by the whole population."""
    _check(num_cases, S)
    chosen = np.sort(rng.choice(num_cases, size=S, replace=False))
    return SampleAssignment(np.broadcast_to(chosen, (pop_size, S)).copy(), shared=True)


def sample_irs(num_cases: int, S: int, pop_size: int, rng: np.random.Generator) -> SampleAssignment:
    """An independent uniform random S-subset for every individual."""
    _check(num_cases, S)
    if pop_size < 1:
        raise ValueError("pop_size must be >= 1")
    keys = rng.random((pop_size, num_cases))
    chosen = np.argsort(keys, axis=1, kind="stable")[:, :S]
    return SampleAssignment(np.sort(chosen, axis=1), shared=False)


@numba.njit(cache=True)
def _abs_rows(start, parent_slot, evaluated, S, keys):
    """Ancestor-based samples, one row per start slot.

    Walks each ancestry marking already-evaluated cases ineligible until at
    most S remain, keeps those, and tops up from the cases marked at the last
    step. If the ancestry runs out first, draws S of the still-eligible cases.
    ``keys`` (uniform in [0, 1), shape (n, S)) drive the random draws.
    """
    n = start.shape[0]
    num_cases = evaluated.shape[1]
    out = np.empty((n, S), dtype=np.intp)
    eligible = np.empty(num_cases, dtype=np.bool_)
    pool = np.empty(num_cases, dtype=np.intp)
    for i in range(n):
        eligible[:] = True
        n_eligible = num_cases
        n_pool = 0
        slot = start[i] if num_cases > S else -1
        while slot >= 0:
            n_marked = 0
            for c in range(num_cases):
                if eligible[c] and evaluated[slot, c]:
                    eligible[c] = False
                    pool[n_marked] = c
                    n_marked += 1
            n_eligible -= n_marked
            if n_eligible <= S:
                n_pool = n_marked
                break
            slot = parent_slot[slot]
        filled = 0
        if n_eligible <= S:
            for c in range(num_cases):
                if eligible[c]:
                    out[i, filled] = c
                    filled += 1
        else:
            # ancestry exhausted: the eligible cases become the draw pool
            for c in range(num_cases):
                if eligible[c]:
                    pool[n_pool] = c
                    n_pool += 1
        # partial Fisher-Yates over the pool for the remaining picks
        for j in range(S - filled):
            swap = j + int(keys[i, j] * (n_pool - j))
            c = pool[swap]
            pool[swap] = pool[j]
            pool[j] = c
            out[i, filled + j] = c
        out[i].sort()
    return out


def _abs(taxa, phylo: Phylogeny, S: int, rng: np.random.Generator) -> np.ndarray:
    _check(phylo.num_cases, S)
    start = phylo.slots(taxa)
    keys = rng.random((len(start), S))
    return _abs_rows(start, phylo._parent_slot, phylo._evaluated, S, keys)


def sample_abs(taxon: int, phylo: Phylogeny, num_cases: int, S: int, rng: np.random.Generator) -> Set[int]:
    """Prefer cases least recently evaluated along the taxon's ancestry."""
    if num_cases != phylo.num_cases:
        raise ValueError("num_cases does not match the phylogeny")
    return set(_abs([taxon], phylo, S, rng)[0].tolist())


def sample_abs_population(taxa: np.ndarray, phylo: Phylogeny, S: int,
                          rng: np.random.Generator) -> SampleAssignment:
    return SampleAssignment(_abs(taxa, phylo, S, rng), shared=False)


def assign(regime: str, S: int, taxa: np.ndarray, phylo: Phylogeny,
           rng: np.random.Generator) -> SampleAssignment:
    num_cases, pop_size = phylo.num_cases, len(taxa)
    if regime == FULL:
        return sample_full(num_cases, pop_size)
    if regime in (DOWN_SAMPLE, DOWN_SAMPLE_EST):
        return sample_down(num_cases, S, pop_size, rng)
    if regime == IRS:
        return sample_irs(num_cases, S, pop_size, rng)
    if regime == ABS:
        return sample_abs_population(taxa, phylo, S, rng)
    raise ValueError(f"unknown sampling regime {regime!r}; expected one of {REGIMES}")
