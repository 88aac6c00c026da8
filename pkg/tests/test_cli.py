import io as stdio
import subprocess
import sys

import pytest

from phylosub import cli, tables
from phylosub.config import ConfigError, ExperimentConfig, load_config, parse_config_text
from phylosub.engine import METRIC_COLUMNS

CONFIG = """\
# tiny exploitation run
diagnostic = exploitation
selection = lexicase
regime = irs
subsample_rate = 0.2
pop_size = 12
num_genes = 10
max_generations = 8
mutation_rate = 0.1
audit_estimation = true
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(CONFIG)
    return path


def read_all(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


class TestConfigFormat:
    def test_parse(self):
        cfg = parse_config_text(CONFIG)
        assert cfg.regime == "irs" and cfg.pop_size == 12 and cfg.audit_estimation is True
        assert cfg.subsample_rate == 0.2 and cfg.tournament_size == 8

    def test_round_trip(self):
        cfg = parse_config_text(CONFIG, seed=5, replicate=2)
        assert parse_config_text("\n".join(cfg.to_lines())) == cfg

    def test_defaults_match_full_scale(self):
        cfg = ExperimentConfig()
        assert (cfg.pop_size, cfg.num_genes, cfg.max_generations) == (500, 100, 50_000)
        assert (cfg.mutation_rate, cfg.mutation_sigma, cfg.depth_limit, cfg.worst_score) == (0.007, 1.0, 8, 0.0)

    @pytest.mark.parametrize("text", [
        "pop_size = ten", "no_equals_sign", "colour = blue", "pop_size = 3\npop_size = 4",
        "audit_estimation = maybe", "max_generations = 2.5", "regime = cohort",
    ])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config_text(text)

    def test_none_and_underscores(self):
        cfg = parse_config_text("max_generations = none\nmax_evaluations = 50_000_000\npop_size = 1000")
        assert cfg.max_generations is None and cfg.max_evaluations == 50_000_000

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.cfg")


class TestRun:
    def test_two_replicates(self, tmp_path, config_file):
        out = tmp_path / "out"
        assert cli.main(["run", "--config", str(config_file), "--replicates", "2",
                         "--seed-base", "10", "--out", str(out)]) == 0
        assert sorted(p.name for p in out.iterdir()) == [
            "metrics_rep000.csv", "metrics_rep001.csv", "summary.csv"]
        with open(out / "summary.csv") as fh:
            rows = tables.read_summary(fh)
        assert [(r["replicate"], r["seed"]) for r in rows] == [(0, 10), (1, 11)]

    def test_metrics_file_schema(self, tmp_path, config_file):
        out = tmp_path / "out"
        cli.main(["run", "--config", str(config_file), "--out", str(out), "--seed-base", "4"])
        text = (out / "metrics_rep000.csv").read_text()
        header = [line for line in text.splitlines() if not line.startswith("#")][0]
        assert header == ",".join(METRIC_COLUMNS) == \
            "generation,evaluations,best_aggregate,coverage,distinct_parents,est_attempts,est_failures,est_mae"
        with open(out / "metrics_rep000.csv") as fh:
            config_lines, rows = tables.read_metrics(fh)
        echoed = parse_config_text("\n".join(config_lines))
        assert echoed == load_config(config_file, seed=4, replicate=0)
        assert [r.generation for r in rows] == list(range(9))

    def test_echoed_config_reproduces_run(self, tmp_path, config_file):
        out = tmp_path / "out"
        cli.main(["run", "--config", str(config_file), "--out", str(out), "--seed-base", "7"])
        with open(out / "metrics_rep000.csv") as fh:
            config_lines, rows = tables.read_metrics(fh)
        again = tmp_path / "echo.cfg"
        again.write_text("\n".join(config_lines))
        out2 = tmp_path / "out2"
        cli.main(["run", "--config", str(again), "--out", str(out2), "--seed-base", "7"])
        assert (out / "metrics_rep000.csv").read_bytes() == (out2 / "metrics_rep000.csv").read_bytes()

    def test_rerun_identical(self, tmp_path, config_file):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            cli.main(["run", "--config", str(config_file), "--replicates", "3", "--out", str(d)])
        assert read_all(a) == read_all(b)

    def test_parallel_matches_serial(self, tmp_path, config_file):
        a, b = tmp_path / "serial", tmp_path / "parallel"
        cli.main(["run", "--config", str(config_file), "--replicates", "3", "--out", str(a), "--parallel", "1"])
        cli.main(["run", "--config", str(config_file), "--replicates", "3", "--out", str(b), "--parallel", "3"])
        assert read_all(a) == read_all(b)

    def test_malformed_config(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("regime = sometimes\n")
        out = tmp_path / "out"
        assert cli.main(["run", "--config", str(bad), "--out", str(out)]) != 0
        assert not out.exists()

    def test_bad_replicate_count(self, tmp_path, config_file):
        out = tmp_path / "out"
        assert cli.main(["run", "--config", str(config_file), "--replicates", "0", "--out", str(out)]) != 0
        assert not out.exists()

    def test_unwritable_output(self, tmp_path, config_file):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert cli.main(["run", "--config", str(config_file), "--out", str(blocker / "sub")]) == cli.EXIT_IO

    def test_phylogeny_dump(self, tmp_path, config_file):
        out = tmp_path / "out"
        cli.main(["run", "--config", str(config_file), "--out", str(out), "--dump-phylogeny"])
        first = (out / "phylogeny_rep000.csv").read_text().splitlines()[0]
        assert first == "taxon_id,parent_id,origin_generation,extant_count,num_evaluations"


class TestCSV:
    def test_metrics_round_trip(self, tmp_path, config_file):
        out = tmp_path / "out"
        cli.main(["run", "--config", str(config_file), "--out", str(out)])
        original = (out / "metrics_rep000.csv").read_text()
        with open(out / "metrics_rep000.csv") as fh:
            config_lines, rows = tables.read_metrics(fh)
        buf = stdio.StringIO()
        tables.write_metrics(buf, parse_config_text("\n".join(config_lines)), rows)
        assert buf.getvalue() == original

    def test_summary_round_trip(self):
        rows = [{"condition": "c", "replicate": 0, "seed": 3, "final_best_aggregate": 0.1 + 0.2,
                 "final_coverage": 4, "mean_distinct_parents": 1 / 3, "est_failure_rate": 0.0}]
        buf = stdio.StringIO()
        tables.write_summary(buf, rows)
        again = tables.read_summary(stdio.StringIO(buf.getvalue()))
        assert again == rows

    def test_empty_mae_column(self):
        assert tables.format_value(None) == "" and tables.parse_value("est_mae", "") is None


def summary_file(path, rows):
    with open(path, "w") as fh:
        tables.write_summary(fh, rows)
    return path


def row(condition, replicate, best, cov=1):
    return {"condition": condition, "replicate": replicate, "seed": replicate, "final_best_aggregate": best,
            "final_coverage": cov, "mean_distinct_parents": 10.0, "est_failure_rate": 0.5}


class TestCompare:
    def test_single_replicate(self, tmp_path, capsys):
        path = summary_file(tmp_path / "s.csv", [row("a", 0, 42.0)])
        assert cli.main(["compare", str(path)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == ",".join(tables.compare_columns())
        record = dict(zip(lines[0].split(","), lines[1].split(",")))
        assert record["final_best_aggregate_median"] == "42.0"
        assert record["final_best_aggregate_min"] == record["final_best_aggregate_max"] == "42.0"

    def test_empty_input(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(",".join(tables.SUMMARY_COLUMNS) + "\n")
        assert cli.main(["compare", str(path)]) != 0
        assert cli.main(["compare"]) != 0

    def test_two_conditions_sorted(self, tmp_path, capsys):
        a = summary_file(tmp_path / "a.csv", [row("zeta", 0, 1.0), row("zeta", 1, 3.0), row("zeta", 2, 8.0)])
        b = summary_file(tmp_path / "b.csv", [row("alpha", 0, 5.0)])
        cli.main(["compare", str(a), str(b)])
        lines = capsys.readouterr().out.splitlines()
        assert [line.split(",")[0] for line in lines[1:]] == ["alpha", "zeta"]
        zeta = dict(zip(lines[0].split(","), lines[2].split(",")))
        assert zeta["replicates"] == "3"
        assert float(zeta["final_best_aggregate_median"]) == 3.0
        assert float(zeta["final_best_aggregate_mean"]) == 4.0

    def test_missing_file(self, tmp_path):
        assert cli.main(["compare", str(tmp_path / "nope.csv")]) == cli.EXIT_IO


def test_module_entry_point(tmp_path, config_file):
    out = tmp_path / "out"
    proc = subprocess.run([sys.executable, "-m", "phylosub", "run", "--config", str(config_file),
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "summary.csv").exists()
