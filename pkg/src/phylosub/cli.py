"""Command-line harness: replicated runs and condition-level comparison.

    phylosub run --config exp.cfg --replicates 20 --seed-base 100 --out results/ [--parallel 4]
    phylosub compare results/*/summary.csv
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import tables
from .config import ConfigError, ExperimentConfig, load_config
from .engine import Evolution, summarize

log = logging.getLogger("phylosub")

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2


def metrics_filename(replicate: int) -> str:
    return f"metrics_rep{replicate:03d}.csv"


def phylogeny_filename(replicate: int) -> str:
    return f"phylogeny_rep{replicate:03d}.csv"


def run_replicate(config: ExperimentConfig, out_dir: str, dump_phylogeny: bool = False) -> Dict:
    """Run one replicate, write its metrics file, return its summary row."""
    evo = Evolution(config)
    history = list(evo.run())
    path = Path(out_dir) / metrics_filename(config.replicate)
    with open(path, "w", newline="") as fh:
        tables.write_metrics(fh, config, history)
    if dump_phylogeny:
        evo.phylo.write_edge_list(Path(out_dir) / phylogeny_filename(config.replicate))
    return summarize(config, history)


def replicate_configs(base: ExperimentConfig, replicates: int, seed_base: int) -> List[ExperimentConfig]:
    return [base.replace(seed=seed_base + r, replicate=r) for r in range(replicates)]


def run(config_path, replicates: int, seed_base: int, out_dir, parallel: Optional[int] = None,
        dump_phylogeny: bool = False) -> int:
    try:
        if replicates < 1:
            raise ConfigError("--replicates must be >= 1")
        base = load_config(config_path)
        configs = replicate_configs(base, replicates, seed_base)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG

    workers = parallel or min(replicates, os.cpu_count() or 1)
    workers = max(1, min(workers, replicates))
    try:
        os.makedirs(out_dir, exist_ok=True)
        if workers == 1:
            rows = [run_replicate(c, str(out_dir), dump_phylogeny) for c in configs]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(run_replicate, c, str(out_dir), dump_phylogeny) for c in configs]
                rows = [f.result() for f in futures]
        rows.sort(key=lambda r: r["replicate"])
        with open(Path(out_dir) / "summary.csv", "w", newline="") as fh:
            tables.write_summary(fh, rows)
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    log.info("wrote %d replicate(s) of %s to %s", replicates, base.condition_name, out_dir)
    return EXIT_OK


def compare(paths: Sequence, out=None) -> int:
    out = out or sys.stdout
    rows = []
    try:
        for path in paths:
            with open(path, newline="") as fh:
                rows.extend(tables.read_summary(fh))
        records = tables.compare(rows)
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    tables.write_comparison(out, records)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phylosub", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run replicates of one configured condition")
    p_run.add_argument("--config", required=True, help="flat key = value config file")
    p_run.add_argument("--replicates", type=int, default=1)
    p_run.add_argument("--seed-base", type=int, default=0, help="replicate r uses seed-base + r")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--parallel", type=int, default=None,
                       help="worker processes (default: replicates capped by cores)")
    p_run.add_argument("--dump-phylogeny", action="store_true",
                       help="also write each run's final pruned phylogeny as an edge list")

    p_cmp = sub.add_parser("compare", help="condition-level statistics over summary files")
    p_cmp.add_argument("summaries", nargs="*")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.command == "run":
        return run(args.config, args.replicates, args.seed_base, args.out, args.parallel, args.dump_phylogeny)
    if not args.summaries:
        log.error("compare needs at least one summary file")
        return EXIT_CONFIG
    return compare(args.summaries)


if __name__ == "__main__":
    sys.exit(main())
