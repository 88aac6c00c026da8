"""Generational loop: sample, evaluate, annotate, estimate, select, reproduce."""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterator, List, Optional

import numpy as np

from . import diagnostics, sampling, selection
from .config import ExperimentConfig
from .phylo import Phylogeny
from .selection import ESTIMATED, EVALUATED, FAILED_ESTIMATE, ScoreTable

STREAMS = ("sampling", "selection", "mutation")


@dataclass(frozen=True)
class GenerationMetrics:
    generation: int
    evaluations: int
    best_aggregate: float
    coverage: int
    distinct_parents: int
    est_attempts: int
    est_failures: int
    est_mae: Optional[float] = None


METRIC_COLUMNS = tuple(f.name for f in fields(GenerationMetrics))


@dataclass
class EstimationAudit:
    attempts: int
    failures: int
    mean_absolute_error: Optional[float]


def make_streams(seed: int) -> dict:
    """Independent named generators derived from one master seed."""
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(STREAMS, children)}


def audit_estimation(table: ScoreTable, truth: np.ndarray) -> EstimationAudit:
    """Compare every estimated entry of ``table`` with the true trait score.

    ``table`` must span every case (the estimating regimes). The true scores
    come from phenotypes already computed, so nothing here counts as an
    evaluation or touches the phylogeny.
    """
    estimated = table.provenance != EVALUATED
    attempts = int(estimated.sum())
    failures = int((table.provenance == FAILED_ESTIMATE).sum())
    mae = float(np.abs(table.scores[estimated] - truth[estimated]).mean()) if attempts else None
    return EstimationAudit(attempts, failures, mae)


class Evolution:
    """State of one run. Call :meth:`run_generation` repeatedly or :meth:`run`."""

    def __init__(self, config: ExperimentConfig):
        config.validate()
        self.config = config
        self.num_cases = config.num_genes
        self.S = config.sample_size
        self.streams = make_streams(config.seed)
        self.phylo = Phylogeny(self.num_cases)
        self.genomes = diagnostics.initial_genomes(config.pop_size, config.num_genes)
        self.taxa = np.array(
            [self.phylo.record_offspring(None, g.tobytes()) for g in self.genomes], dtype=np.intp
        )
        self.generation = 0
        self.evaluations = 0
        self.last_table: Optional[ScoreTable] = None
        self.last_phenotypes: Optional[np.ndarray] = None
        self.last_parents: Optional[np.ndarray] = None

    # -- phases -----------------------------------------------------------

    def _evaluate(self, assignment: sampling.SampleAssignment) -> np.ndarray:
        phenotypes = diagnostics.translate(self.config.diagnostic, self.genomes)
        cases = assignment.cases
        rows = np.arange(len(cases))[:, None]
        self.phylo.annotate_rows(self.taxa, cases, phenotypes[rows, cases])
        self.evaluations += cases.size
        return phenotypes

    def _score_table(self, assignment: sampling.SampleAssignment, phenotypes: np.ndarray) -> ScoreTable:
        regime = self.config.regime
        if regime == sampling.FULL:
            return ScoreTable(phenotypes.copy())
        if regime == sampling.DOWN_SAMPLE:
            return ScoreTable(phenotypes[:, assignment.cases[0]])

        uniq, inverse = np.unique(self.taxa, return_inverse=True)
        est, distance = self.phylo.estimate_rows(uniq, self.config.depth_limit, self.config.worst_score)
        scores = est[inverse]
        provenance = np.where(distance[inverse] < 0, FAILED_ESTIMATE, ESTIMATED).astype(np.int8)
        rows = np.arange(len(self.taxa))[:, None]
        scores[rows, assignment.cases] = phenotypes[rows, assignment.cases]
        provenance[rows, assignment.cases] = EVALUATED
        return ScoreTable(scores, provenance)

    def _reproduce(self, parents: np.ndarray) -> None:
        cfg = self.config
        children = diagnostics.mutate(
            self.genomes[parents], cfg.mutation_rate, cfg.mutation_sigma, self.streams["mutation"]
        )
        self.phylo.generation = self.generation + 1
        # births before deaths so the parents' taxa survive as ancestors
        parent_taxa = self.taxa[parents].tolist()
        child_taxa = np.array(
            [self.phylo.record_offspring(pt, g.tobytes()) for pt, g in zip(parent_taxa, children)],
            dtype=np.intp,
        )
        for tid in self.taxa.tolist():
            self.phylo.record_death(tid)
        self.genomes = children
        self.taxa = child_taxa

    # -- driver -----------------------------------------------------------

    def is_last_generation(self) -> bool:
        """True when the upcoming generation must not be followed by another."""
        cfg = self.config
        if cfg.max_generations is not None and self.generation >= cfg.max_generations:
            return True
        if cfg.max_evaluations is not None:
            per_generation = cfg.pop_size * self.S
            return self.evaluations + 2 * per_generation > cfg.max_evaluations
        return False

    def run_generation(self, reproduce: bool = True) -> GenerationMetrics:
        cfg = self.config
        assignment = sampling.assign(cfg.regime, self.S, self.taxa, self.phylo, self.streams["sampling"])
        phenotypes = self._evaluate(assignment)
        table = self._score_table(assignment, phenotypes)

        attempts = failures = 0
        mae = None
        if cfg.regime in sampling.ESTIMATING_REGIMES:
            attempts = int((table.provenance != EVALUATED).sum())
            failures = int((table.provenance == FAILED_ESTIMATE).sum())
            if cfg.audit_estimation:
                mae = audit_estimation(table, phenotypes).mean_absolute_error

        parents = selection.select_parents(
            cfg.selection, table, cfg.pop_size, self.streams["selection"], cfg.tournament_size
        )
        metrics = GenerationMetrics(
            generation=self.generation,
            evaluations=self.evaluations,
            best_aggregate=float(phenotypes.sum(axis=1).max()),
            coverage=diagnostics.satisfactory_trait_coverage(phenotypes),
            distinct_parents=selection.distinct_parents(parents),
            est_attempts=attempts,
            est_failures=failures,
            est_mae=mae,
        )
        self.last_table, self.last_phenotypes, self.last_parents = table, phenotypes, parents
        if reproduce:
            self._reproduce(parents)
            self.generation += 1
        return metrics

    def run(self) -> Iterator[GenerationMetrics]:
        """Yield metrics at the recording interval, always including the final generation."""
        interval = self.config.record_interval
        while True:
            last = self.is_last_generation()
            gen = self.generation
            metrics = self.run_generation(reproduce=not last)
            if last or gen % interval == 0:
                yield metrics
            if last:
                return


def run_experiment(config: ExperimentConfig) -> List[GenerationMetrics]:
    return list(Evolution(config).run())


def summarize(config: ExperimentConfig, history: List[GenerationMetrics]) -> dict:
    """One summary row for a finished run."""
    final = history[-1]
    attempts = sum(m.est_attempts for m in history)
    failures = sum(m.est_failures for m in history)
    return {
        "condition": config.condition_name,
        "replicate": config.replicate,
        "seed": config.seed,
        "final_best_aggregate": final.best_aggregate,
        "final_coverage": final.coverage,
        "mean_distinct_parents": float(np.mean([m.distinct_parents for m in history])),
        "est_failure_rate": failures / attempts if attempts else 0.0,
    }
