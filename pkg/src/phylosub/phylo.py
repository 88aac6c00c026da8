"""Genotype-level ancestry tracking with per-case evaluation annotations.

Each taxon stands for one genotype. Taxa carry a dense score vector plus an
"evaluated" mask over the training cases, which lets ancestor-based
estimation run over whole populations with array operations.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, Iterator, List, Optional, Set, Tuple

import numpy as np

DEFAULT_DEPTH_LIMIT = 8

SOURCE_SELF = "self"
SOURCE_ANCESTOR = "ancestor"
SOURCE_FAILED = "failed"

EDGE_LIST_COLUMNS = ("taxon_id", "parent_id", "origin_generation", "extant_count", "num_evaluations")


class PhylogenyError(Exception):
    """Raised when the tracker is used inconsistently (unknown ids, double deaths)."""


@dataclass(frozen=True)
class EstimationResult:
    value: float
    source: str
    distance: int

    @property
    def failed(self) -> bool:
        return self.source == SOURCE_FAILED


class Taxon:
    """One genotype in the tree. Scores live in the owning phylogeny's pooled arrays."""

    __slots__ = (
        "id",
        "parent",
        "genome_signature",
        "extant_count",
        "origin_generation",
        "num_children",
        "slot",
        "_owner",
    )

    def __init__(self, owner: "Phylogeny", taxon_id: int, parent: Optional[int],
                 genome_signature: Hashable, origin_generation: int, slot: int):
        self._owner = owner
        self.id = taxon_id
        self.parent = parent
        self.genome_signature = genome_signature
        self.extant_count = 0
        self.origin_generation = origin_generation
        self.num_children = 0
        self.slot = slot

    @property
    def scores(self) -> np.ndarray:
        return self._owner._scores[self.slot]

    @property
    def evaluated(self) -> np.ndarray:
        return self._owner._evaluated[self.slot]

    @property
    def evaluations(self) -> Dict[int, float]:
        """Sparse view: case id -> score for every evaluated case."""
        scores = self.scores
        return {int(c): float(scores[c]) for c in np.flatnonzero(self.evaluated)}

    @property
    def num_evaluations(self) -> int:
        return int(self.evaluated.sum())

    def __repr__(self) -> str:
        return (f"Taxon(id={self.id}, parent={self.parent}, extant={self.extant_count}, "
                f"evaluated={self.num_evaluations})")


class Phylogeny:
    """Ancestry tree over genotypes, pruned of extinct leaves as deaths arrive.

    Chains are never collapsed, so one parent link always equals one
    genotype change; estimation distances depend on that.
    """

    def __init__(self, num_cases: int):
        if num_cases < 1:
            raise ValueError("num_cases must be >= 1")
        self.num_cases = num_cases
        self.taxa: Dict[int, Taxon] = {}
        self.roots: Set[int] = set()
        self.generation = 0
        self._next_id = 0
        # genome signature -> taxon id, for taxa with living members
        self._extant_by_signature: Dict[Hashable, int] = {}
        # annotation storage, one row per live slot; pruned slots are recycled
        capacity = 64
        self._scores = np.zeros((capacity, num_cases), dtype=float)
        self._evaluated = np.zeros((capacity, num_cases), dtype=bool)
        self._parent_slot = np.full(capacity, -1, dtype=np.intp)
        self._free: List[int] = list(range(capacity - 1, -1, -1))

    def _alloc_slot(self) -> int:
        if not self._free:
            old = len(self._parent_slot)
            self._scores = np.concatenate([self._scores, np.zeros_like(self._scores)])
            self._evaluated = np.concatenate([self._evaluated, np.zeros_like(self._evaluated)])
            self._parent_slot = np.concatenate([self._parent_slot, np.full(old, -1, dtype=np.intp)])
            self._free = list(range(2 * old - 1, old - 1, -1))
        return self._free.pop()

    def _release_slot(self, slot: int) -> None:
        self._scores[slot] = 0.0
        self._evaluated[slot] = False
        self._parent_slot[slot] = -1
        self._free.append(slot)

    def slots(self, taxon_ids: Iterable[int]) -> np.ndarray:
        return np.fromiter((self.get(t).slot for t in taxon_ids), dtype=np.intp)

    def __len__(self) -> int:
        return len(self.taxa)

    def __contains__(self, taxon_id: int) -> bool:
        return taxon_id in self.taxa

    def get(self, taxon_id: int) -> Taxon:
        try:
            return self.taxa[taxon_id]
        except KeyError:
            raise PhylogenyError(f"unknown taxon id {taxon_id}") from None

    # -- births and deaths ------------------------------------------------

    def record_offspring(self, parent: Optional[int], genome_signature: Hashable) -> int:
        """Register one new living individual and return the taxon it belongs to.

        Offspring genetically identical to the parent (or to any taxon that
        currently has living members) join that taxon.
        """
        parent_taxon = self.get(parent) if parent is not None else None
        if parent_taxon is not None and parent_taxon.genome_signature == genome_signature:
            self._add_member(parent_taxon)
            return parent_taxon.id
        existing = self._extant_by_signature.get(genome_signature)
        if existing is not None:
            self._add_member(self.taxa[existing])
            return existing

        taxon = Taxon(self, self._next_id, parent, genome_signature, self.generation, self._alloc_slot())
        self._next_id += 1
        self.taxa[taxon.id] = taxon
        if parent_taxon is None:
            self.roots.add(taxon.id)
        else:
            parent_taxon.num_children += 1
            self._parent_slot[taxon.slot] = parent_taxon.slot
        self._add_member(taxon)
        return taxon.id

    def _add_member(self, taxon: Taxon) -> None:
        taxon.extant_count += 1
        if taxon.extant_count == 1:
            self._extant_by_signature.setdefault(taxon.genome_signature, taxon.id)

    def record_death(self, taxon_id: int) -> None:
        taxon = self.get(taxon_id)
        if taxon.extant_count <= 0:
            raise PhylogenyError(f"taxon {taxon_id} has no living members")
        taxon.extant_count -= 1
        if taxon.extant_count > 0:
            return
        if self._extant_by_signature.get(taxon.genome_signature) == taxon.id:
            del self._extant_by_signature[taxon.genome_signature]
        # prune the extinct branch upward until a taxon that is still needed
        node: Optional[Taxon] = taxon
        while node is not None and node.extant_count == 0 and node.num_children == 0:
            del self.taxa[node.id]
            self._release_slot(node.slot)
            if node.parent is None:
                self.roots.discard(node.id)
                node = None
            else:
                node = self.taxa[node.parent]
                node.num_children -= 1

    # -- annotations ------------------------------------------------------

    def annotate(self, taxon_id: int, case: int, score: float) -> None:
        """Record a score; an existing score for the same case is kept."""
        slot = self.get(taxon_id).slot
        if not self._evaluated[slot, case]:
            self._scores[slot, case] = score
            self._evaluated[slot, case] = True

    def annotate_many(self, taxon_id: int, cases: np.ndarray, scores: np.ndarray) -> None:
        self.annotate_rows([taxon_id], np.atleast_2d(cases), np.atleast_2d(scores))

    def annotate_rows(self, taxon_ids: Iterable[int], cases: np.ndarray, scores: np.ndarray) -> None:
        """Row i of ``cases``/``scores`` annotates taxon i; existing entries are kept.

        Several rows may name the same taxon (clones evaluated on different
        cases), in which case they must agree wherever their cases overlap.
        """
        slots = self.slots(taxon_ids)[:, None]
        cases = np.asarray(cases, dtype=np.intp)
        scores = np.asarray(scores, dtype=float)
        fresh = ~self._evaluated[slots, cases]
        rows = np.broadcast_to(slots, cases.shape)[fresh]
        self._scores[rows, cases[fresh]] = scores[fresh]
        self._evaluated[slots, cases] = True

    def lookup(self, taxon_id: int, case: int) -> Optional[float]:
        taxon = self.get(taxon_id)
        return float(taxon.scores[case]) if taxon.evaluated[case] else None

    # -- queries ----------------------------------------------------------

    def iter_ancestry(self, taxon_id: int) -> Iterator[Taxon]:
        """Yield the taxon, then its parent, grandparent, ... up to the root."""
        taxon: Optional[Taxon] = self.get(taxon_id)
        while taxon is not None:
            yield taxon
            taxon = None if taxon.parent is None else self.taxa[taxon.parent]

    def ancestry(self, taxon_id: int, max_steps: Optional[int] = None) -> List[int]:
        """Taxon id followed by its direct ancestors, at most ``max_steps`` links up."""
        chain = []
        for taxon in self.iter_ancestry(taxon_id):
            chain.append(taxon.id)
            if max_steps is not None and len(chain) > max_steps:
                break
        return chain

    def estimate(self, taxon_id: int, case: int, depth_limit: int = DEFAULT_DEPTH_LIMIT,
                 worst_score: float = 0.0) -> EstimationResult:
        if depth_limit < 0:
            raise ValueError("depth_limit must be >= 0")
        chain = self.ancestry(taxon_id, depth_limit)
        for steps, tid in enumerate(chain):
            taxon = self.taxa[tid]
            if taxon.evaluated[case]:
                source = SOURCE_SELF if steps == 0 else SOURCE_ANCESTOR
                return EstimationResult(float(taxon.scores[case]), source, steps)
        return EstimationResult(float(worst_score), SOURCE_FAILED, len(chain) - 1)

    def estimate_rows(self, taxon_ids: Iterable[int], depth_limit: int = DEFAULT_DEPTH_LIMIT,
                      worst_score: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
        """Estimate every case for each taxon at once.

        Returns ``(scores, distance)``, both shaped (len(taxon_ids), num_cases).
        ``distance`` is 0 for the taxon's own scores, d for an ancestor d steps
        up, and -1 where the estimate failed (score set to ``worst_score``).
        """
        if depth_limit < 0:
            raise ValueError("depth_limit must be >= 0")
        slots = self.slots(taxon_ids)
        # chain[i, d] = slot of the ancestor d steps above taxon i, or -1
        chain = np.empty((len(slots), depth_limit + 1), dtype=np.intp)
        chain[:, 0] = slots
        for step in range(1, depth_limit + 1):
            prev = chain[:, step - 1]
            chain[:, step] = np.where(prev >= 0, self._parent_slot[np.maximum(prev, 0)], -1)
        valid = chain >= 0
        mask = self._evaluated[chain] & valid[:, :, None]
        first = mask.argmax(axis=1)
        found = mask.any(axis=1)
        picked_slot = np.take_along_axis(chain, first, axis=1)
        picked = self._scores[picked_slot, np.arange(self.num_cases)]
        scores = np.where(found, picked, worst_score)
        distance = np.where(found, first, -1)
        return scores, distance

    def evaluated_cases_along_ancestry(self, taxon_id: int) -> List[Set[int]]:
        return [
            set(np.flatnonzero(self.taxa[tid].evaluated).tolist())
            for tid in self.ancestry(taxon_id)
        ]

    def extant_taxa(self) -> List[int]:
        return [tid for tid, t in self.taxa.items() if t.extant_count > 0]

    def total_extant(self) -> int:
        return sum(t.extant_count for t in self.taxa.values())

    # -- output -----------------------------------------------------------

    def write_edge_list(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(EDGE_LIST_COLUMNS)
            for tid in sorted(self.taxa):
                t = self.taxa[tid]
                writer.writerow([
                    t.id, "" if t.parent is None else t.parent,
                    t.origin_generation, t.extant_count, t.num_evaluations,
                ])
