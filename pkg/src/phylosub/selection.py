"""Parent selection over a complete score table (rows = individuals, columns = cases)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numba
import numpy as np

LEXICASE = "lexicase"
TOURNAMENT = "tournament"
SELECTIONS = (LEXICASE, TOURNAMENT)
DEFAULT_TOURNAMENT_SIZE = 8

EVALUATED = 0
ESTIMATED = 1
FAILED_ESTIMATE = 2


class SelectionError(ValueError):
    pass


@dataclass
class ScoreTable:
    """Scores used for selection plus where each entry came from.

    ``provenance`` uses EVALUATED / ESTIMATED / FAILED_ESTIMATE codes; when it
    is omitted every entry counts as evaluated.
    """

    scores: np.ndarray
    provenance: Optional[np.ndarray] = None

    def __post_init__(self):
        self.scores = np.atleast_2d(np.asarray(self.scores, dtype=float))
        if self.provenance is None:
            self.provenance = np.zeros(self.scores.shape, dtype=np.int8)
        if self.provenance.shape != self.scores.shape:
            raise SelectionError("provenance shape does not match scores")

    @property
    def num_rows(self) -> int:
        return self.scores.shape[0]

    @property
    def num_cases(self) -> int:
        return self.scores.shape[1]


def _matrix(table) -> np.ndarray:
    scores = table.scores if isinstance(table, ScoreTable) else np.atleast_2d(np.asarray(table, dtype=float))
    if scores.shape[0] == 0:
        raise SelectionError("cannot select from an empty score table")
    if np.isnan(scores).any():
        raise SelectionError("score table has unfilled entries")
    return scores


def lexicase_select_one(table, rng: np.random.Generator) -> int:
    """Standard lexicase: filter to exact elites case by case in a random order."""
    scores = _matrix(table)
    pool = np.arange(scores.shape[0])
    for case in rng.permutation(scores.shape[1]):
        col = scores[pool, case]
        pool = pool[col == col.max()]
    return int(pool[rng.integers(len(pool))]) if len(pool) > 1 else int(pool[0])


@numba.njit(cache=True)
def _lexicase_winners(rows, keys):
    """Winning row of each lexicase event; ``keys[k]`` drives event k's shuffle.

    Cases are drawn lazily by Fisher-Yates, so an event that narrows to one
    row early consumes no further ordering work.
    """
    n_rows, n_cases = rows.shape
    n_events = keys.shape[0]
    winners = np.empty(n_events, dtype=np.intp)
    pool = np.empty(n_rows, dtype=np.intp)
    order = np.empty(n_cases, dtype=np.intp)
    for k in range(n_events):
        for i in range(n_rows):
            pool[i] = i
        for j in range(n_cases):
            order[j] = j
        size = n_rows
        step = 0
        while size > 1 and step < n_cases:
            swap = step + int(keys[k, step] * (n_cases - step))
            case = order[swap]
            order[swap] = order[step]
            order[step] = case
            best = rows[pool[0], case]
            for i in range(1, size):
                v = rows[pool[i], case]
                if v > best:
                    best = v
            kept = 0
            for i in range(size):
                if rows[pool[i], case] == best:
                    pool[kept] = pool[i]
                    kept += 1
            size = kept
            step += 1
        winners[k] = pool[0]
    return winners


def lexicase_select(table, n: int, rng: np.random.Generator) -> np.ndarray:
    """Select ``n`` parents with independent lexicase events.

    Identical rows are merged first. Two distinct rows can never both survive
    every case, so each event ends with one distinct row, and the parent is
    then drawn uniformly from the individuals sharing it. This yields the same
    selection distribution as filtering individuals directly.
    """
    scores = _matrix(table)
    uniq, inverse, counts = np.unique(scores, axis=0, return_inverse=True, return_counts=True)
    members = np.argsort(inverse.reshape(-1), kind="stable")
    offsets = np.concatenate(([0], np.cumsum(counts)))
    keys = rng.random((n, scores.shape[1]))
    winner = _lexicase_winners(np.ascontiguousarray(uniq), keys)
    pick = np.floor(rng.random(n) * counts[winner]).astype(np.intp)
    return members[offsets[winner] + pick]


def tournament_select(table, n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` tournaments of ``k`` rows drawn with replacement; highest row sum wins.

    Ties are broken uniformly among the tied draws.
    """
    if k < 1:
        raise SelectionError("tournament size must be >= 1")
    scores = _matrix(table)
    aggregate = scores.sum(axis=1)
    draws = rng.integers(scores.shape[0], size=(n, k))
    drawn = aggregate[draws]
    best = drawn.max(axis=1, keepdims=True)
    tiebreak = np.where(drawn == best, rng.random((n, k)), -1.0)
    return draws[np.arange(n), tiebreak.argmax(axis=1)]


def tournament_select_one(table, k: int, rng: np.random.Generator) -> int:
    return int(tournament_select(table, 1, k, rng)[0])


def select_parents(kind: str, table, n: int, rng: np.random.Generator,
                   tournament_size: int = DEFAULT_TOURNAMENT_SIZE) -> np.ndarray:
    if kind == LEXICASE:
        return lexicase_select(table, n, rng)
    if kind == TOURNAMENT:
        return tournament_select(table, n, tournament_size, rng)
    raise SelectionError(f"unknown selection scheme {kind!r}; expected one of {SELECTIONS}")


def distinct_parents(selected: Sequence[int]) -> int:
    return len(set(np.asarray(selected).tolist()))
