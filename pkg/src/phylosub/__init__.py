"""Phylogeny-informed subsampling for evolutionary search on diagnostic landscapes."""
from .config import ConfigError, ExperimentConfig, load_config, parse_config_text
from .engine import Evolution, GenerationMetrics, run_experiment
from .phylo import EstimationResult, Phylogeny, PhylogenyError

__all__ = [
    "ConfigError",
    "EstimationResult",
    "Evolution",
    "ExperimentConfig",
    "GenerationMetrics",
    "Phylogeny",
    "PhylogenyError",
    "load_config",
    "parse_config_text",
    "run_experiment",
]

__version__ = "0.1.0"
