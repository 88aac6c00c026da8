"""Diagnostic landscapes: genome -> phenotype translations and summary metrics.

Every function accepts either a single genome (1-D) or a population stacked
row-wise (2-D) and returns an array of the same shape.
"""
from __future__ import annotations

import numpy as np

GENE_MIN = 0.0
GENE_MAX = 100.0
SATISFIED_THRESHOLD = 98.0

DEFAULT_NUM_GENES = 100
DEFAULT_MUTATION_RATE = 0.007
DEFAULT_MUTATION_SIGMA = 1.0

DIAGNOSTICS = ("exploitation", "contradictory", "multipath")


def _as_rows(genes):
    genes = np.asarray(genes, dtype=float)
    return np.atleast_2d(genes), genes.ndim == 1


def translate_exploitation(genes: np.ndarray) -> np.ndarray:
    return np.array(genes, dtype=float, copy=True)


def translate_contradictory(genes: np.ndarray) -> np.ndarray:
    """Keep only the maximum gene (lowest index on ties); zero the rest."""
    rows, single = _as_rows(genes)
    out = np.zeros_like(rows)
    active = rows.argmax(axis=1)
    idx = np.arange(rows.shape[0])
    out[idx, active] = rows[idx, active]
    return out[0] if single else out


def translate_multipath(genes: np.ndarray) -> np.ndarray:
    """Keep the run that starts at the maximum gene and continues rightward
    while each gene is <= its predecessor."""
    rows, single = _as_rows(genes)
    n, length = rows.shape
    start = rows.argmax(axis=1)
    positions = np.arange(length)
    # a rise at position j breaks any region that reached j - 1
    rise = np.zeros((n, length), dtype=bool)
    rise[:, 1:] = rows[:, 1:] > rows[:, :-1]
    stops = rise & (positions > start[:, None])
    end = np.where(stops.any(axis=1), stops.argmax(axis=1), length)
    active = (positions >= start[:, None]) & (positions < end[:, None])
    out = np.where(active, rows, 0.0)
    return out[0] if single else out


TRANSLATIONS = {
    "exploitation": translate_exploitation,
    "contradictory": translate_contradictory,
    "multipath": translate_multipath,
}


def translate(kind: str, genes: np.ndarray) -> np.ndarray:
    try:
        fn = TRANSLATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown diagnostic {kind!r}; expected one of {DIAGNOSTICS}") from None
    return fn(genes)


def aggregate_score(traits: np.ndarray) -> np.ndarray | float:
    traits = np.asarray(traits, dtype=float)
    total = traits.sum(axis=-1)
    return float(total) if traits.ndim == 1 else total


def satisfactory_trait_coverage(phenotypes: np.ndarray, threshold: float = SATISFIED_THRESHOLD) -> int:
    """Number of trait positions exceeding ``threshold`` in at least one phenotype."""
    phenotypes = np.atleast_2d(np.asarray(phenotypes, dtype=float))
    return int((phenotypes > threshold).any(axis=0).sum())


def mutate(genes: np.ndarray, per_gene_rate: float, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Gaussian point mutations at ``per_gene_rate``, clamped to the gene bounds.

    Returns a new array; the input is untouched.
    """
    if not 0.0 <= per_gene_rate <= 1.0:
        raise ValueError("per_gene_rate must be in [0, 1]")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    genes = np.asarray(genes, dtype=float)
    out = genes.copy()
    hit = rng.random(genes.shape) < per_gene_rate
    n_hit = int(hit.sum())
    if n_hit:
        out[hit] = np.clip(out[hit] + rng.normal(0.0, sigma, n_hit), GENE_MIN, GENE_MAX)
    return out


def initial_genomes(pop_size: int, num_genes: int) -> np.ndarray:
    return np.zeros((pop_size, num_genes), dtype=float)
