"""CSV reading and writing for metric streams, run summaries and comparisons."""
from __future__ import annotations

import csv
import statistics
from collections import defaultdict
from typing import Dict, Iterable, List, Sequence, TextIO, Tuple

from .config import ExperimentConfig
from .engine import METRIC_COLUMNS, GenerationMetrics

SUMMARY_COLUMNS = (
    "condition",
    "replicate",
    "seed",
    "final_best_aggregate",
    "final_coverage",
    "mean_distinct_parents",
    "est_failure_rate",
)
COMPARED_METRICS = ("final_best_aggregate", "final_coverage", "mean_distinct_parents", "est_failure_rate")
STATISTICS = ("median", "mean", "min", "max")

_INT_COLUMNS = {"generation", "evaluations", "coverage", "distinct_parents", "est_attempts",
                "est_failures", "replicate", "seed", "final_coverage"}


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_value(column: str, text: str):
    if text == "":
        return None
    if column == "condition":
        return text
    if column in _INT_COLUMNS:
        return int(text)
    return float(text)


def _comment_lines(handle: TextIO) -> Tuple[List[str], List[str]]:
    comments, body = [], []
    for line in handle:
        (comments if line.startswith("#") else body).append(line)
    return comments, body


# -- per-generation metrics ------------------------------------------------

def write_metrics(handle: TextIO, config: ExperimentConfig, history: Iterable[GenerationMetrics]) -> None:
    handle.write("# phylosub generation metrics\n")
    for line in config.to_lines():
        handle.write(f"# {line}\n")
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(METRIC_COLUMNS)
    for m in history:
        writer.writerow([format_value(getattr(m, col)) for col in METRIC_COLUMNS])


def read_metrics(handle: TextIO) -> Tuple[List[str], List[GenerationMetrics]]:
    """Returns the echoed config lines and the metric rows."""
    comments, body = _comment_lines(handle)
    reader = csv.DictReader(body)
    if tuple(reader.fieldnames or ()) != METRIC_COLUMNS:
        raise ValueError(f"unexpected metric columns {reader.fieldnames}")
    rows = [GenerationMetrics(**{k: parse_value(k, v) for k, v in row.items()}) for row in reader]
    config_lines = [c[1:].strip() for c in comments if "=" in c]
    return config_lines, rows


# -- summaries ---------------------------------------------------------------

def write_summary(handle: TextIO, rows: Sequence[Dict]) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in rows:
        writer.writerow([format_value(row[col]) for col in SUMMARY_COLUMNS])


def read_summary(handle: TextIO) -> List[Dict]:
    _, body = _comment_lines(handle)
    reader = csv.DictReader(body)
    if tuple(reader.fieldnames or ()) != SUMMARY_COLUMNS:
        raise ValueError(f"unexpected summary columns {reader.fieldnames}")
    return [{k: parse_value(k, v) for k, v in row.items()} for row in reader]


def compare_columns() -> List[str]:
    cols = ["condition", "replicates"]
    for metric in COMPARED_METRICS:
        cols += [f"{metric}_{stat}" for stat in STATISTICS]
    return cols


def compare(rows: Sequence[Dict]) -> List[Dict]:
    """Per-condition median/mean/min/max of every summary metric, ordered by condition."""
    if not rows:
        raise ValueError("no summary rows to compare")
    grouped: Dict[str, List[Dict]] = defaultdict(list)
    for row in rows:
        grouped[row["condition"]].append(row)
    out = []
    for condition in sorted(grouped):
        group = grouped[condition]
        record = {"condition": condition, "replicates": len(group)}
        for metric in COMPARED_METRICS:
            values = [float(r[metric]) for r in group]
            record[f"{metric}_median"] = float(statistics.median(values))
            record[f"{metric}_mean"] = float(statistics.fmean(values))
            record[f"{metric}_min"] = min(values)
            record[f"{metric}_max"] = max(values)
        out.append(record)
    return out


def write_comparison(handle: TextIO, records: Sequence[Dict]) -> None:
    columns = compare_columns()
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(columns)
    for record in records:
        writer.writerow([format_value(record[c]) for c in columns])
