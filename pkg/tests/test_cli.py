"""CLI tests: parsing, output formats, exit codes, round trips, figures."""

import csv
import io
import json
import math

import pytest

from mtest.cli import UsageError, format_table, main, parse_table
from mtest.exactprob import TableCounts


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


class TestParseTable:
    def test_2x2(self):
        assert parse_table("3,1;1,3").counts == ((3, 1), (1, 3))

    def test_all_failure_table(self):
        assert parse_table("0,0;10,7").counts == ((0, 0), (10, 7))

    def test_whitespace_tolerated(self):
        assert parse_table(" 1 ,2 ; 3, 4 ").counts == ((1, 2), (3, 4))

    def test_ragged_rows(self):
        with pytest.raises(UsageError, match="row 2 has 1 entries, expected 2"):
            parse_table("1,2;3")

    def test_negative_entry(self):
        with pytest.raises(UsageError, match="row 2, entry 1"):
            parse_table("1,2;-3,4")

    def test_non_integer_entry(self):
        with pytest.raises(UsageError, match="row 1, entry 2: '2.5'"):
            parse_table("1,2.5;3,4")

    def test_empty(self):
        with pytest.raises(UsageError, match="empty"):
            parse_table("   ")

    def test_round_trip(self):
        t = TableCounts(((4, 0, 2), (1, 3, 1), (0, 2, 0)))
        assert parse_table(format_table(t)) == t


class TestPCommand:
    def test_one_sided_example(self, capsys):
        code, out, _ = run_cli(["p", "--table", "0,1;1,0", "--sided", "one"], capsys)
        assert code == 0
        header, rows = read_csv(out)
        record = dict(zip(header, rows[0]))
        assert float(record["p_value"]) == pytest.approx(1 / 12, rel=1e-12)
        assert record["sided"] == "one"

    def test_two_sided_json(self, capsys):
        code, out, _ = run_cli(["p", "--table", "1,0;0,1", "--format", "json"], capsys)
        assert code == 0
        obj = json.loads(out)
        assert obj["command"] == "p"
        assert obj["result"]["p_value"] == pytest.approx(1 / 3, rel=1e-12)
        assert obj["result"]["tables_total"] == 4
        assert "tie_tolerance" in obj["metadata"]
        assert obj["metadata"]["versions"]["mtest"]

    def test_one_sided_rejects_non_2x2(self, capsys):
        code, _, err = run_cli(
            ["p", "--table", "1,1,1;1,1,1", "--sided", "one"], capsys
        )
        assert code == 2
        assert "2x2" in err

    def test_bad_table_is_usage_error(self, capsys):
        code, _, err = run_cli(["p", "--table", "1,x;2,3"], capsys)
        assert code == 2
        assert "not an integer" in err


class TestGridCommand:
    def test_two_sided_csv(self, capsys):
        code, out, _ = run_cli(["grid", "--marginals", "10,7"], capsys)
        assert code == 0
        header, rows = read_csv(out)
        assert header == ["s1", "s2", "probability", "log_probability"]
        assert len(rows) == 88
        total = math.fsum(float(r[2]) for r in rows)
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_one_sided_sum(self, capsys):
        code, out, _ = run_cli(["grid", "--marginals", "10,7", "--sided", "one"], capsys)
        _, rows = read_csv(out)
        assert math.fsum(float(r[2]) for r in rows) == pytest.approx(0.5, abs=1e-10)

    def test_rejects_three_marginals(self, capsys):
        code, _, err = run_cli(["grid", "--marginals", "10,7,5"], capsys)
        assert code == 2
        assert "two column marginals" in err

    def test_figure_rendering(self, capsys, tmp_path):
        target = tmp_path / "grid.png"
        code, out, _ = run_cli(
            ["grid", "--marginals", "5,4", "--figure", str(target)], capsys
        )
        assert code == 0
        assert target.exists() and target.stat().st_size > 0
        assert len(read_csv(out)[1]) == 30  # CSV still emitted


class TestCountCommand:
    def test_csv(self, capsys):
        code, out, _ = run_cli(["count", "--marginals", "16,16,16,16,16"], capsys)
        assert code == 0
        header, rows = read_csv(out)
        assert rows[0][header.index("tables")] == str(17**5)

    def test_json_d3(self, capsys):
        code, out, _ = run_cli(
            ["count", "--marginals", "2,2", "--rows", "3", "--format", "json"], capsys
        )
        obj = json.loads(out)
        assert obj["tables"] == 36


class TestSimulateCommand:
    def test_tables_roundtrip(self, capsys):
        code, out, _ = run_cli(
            ["simulate", "--marginals", "10,7", "-N", "20", "--seed", "5"], capsys
        )
        assert code == 0
        header, rows = read_csv(out)
        assert header == ["sim", "table"]
        assert len(rows) == 20
        for _, text in rows:
            assert parse_table(text).column_sums == (10, 7)

    def test_pvalues_column(self, capsys):
        code, out, _ = run_cli(
            [
                "simulate", "--marginals", "4,3", "-N", "10",
                "--seed", "5", "--pvalues",
            ],
            capsys,
        )
        header, rows = read_csv(out)
        assert header == ["sim", "table", "p_value"]
        assert all(0.0 <= float(r[2]) <= 1.0 for r in rows)

    def test_one_sided_null_hypothesis(self, capsys):
        code, out, _ = run_cli(
            [
                "simulate", "--marginals", "6,6", "-N", "5", "--seed", "1",
                "--hypothesis", "one_sided_null",
            ],
            capsys,
        )
        assert code == 0
        assert len(read_csv(out)[1]) == 5

    def test_one_sided_null_needs_2x2(self, capsys):
        code, _, err = run_cli(
            [
                "simulate", "--marginals", "6,6,6", "-N", "5",
                "--hypothesis", "one_sided_null",
            ],
            capsys,
        )
        assert code == 2


class TestPowerCommand:
    def test_rows_and_tests(self, capsys):
        code, out, _ = run_cli(
            [
                "power", "--marginals", "10,7", "-N", "300", "--seed", "42",
                "--tests", "mtest,fisher,barnard", "--alphas", "0.01,0.05,0.1",
            ],
            capsys,
        )
        assert code == 0
        header, rows = read_csv(out)
        assert header == ["alpha", "test", "tpr", "fpr"]
        assert len(rows) == 9
        tests = {r[1] for r in rows}
        assert tests == {"mtest", "fisher", "barnard"}
        for r in rows:
            assert 0.0 <= float(r[2]) <= 1.0
            assert 0.0 <= float(r[3]) <= 1.0

    def test_unknown_test(self, capsys):
        code, _, err = run_cli(
            ["power", "--marginals", "10,7", "-N", "10", "--tests", "boschloo"], capsys
        )
        assert code == 2
        assert "unknown test" in err

    def test_figure_rendering(self, capsys, tmp_path):
        target = tmp_path / "power.pdf"
        code, _, _ = run_cli(
            [
                "power", "--marginals", "5,4", "-N", "100", "--seed", "1",
                "--tests", "mtest,fisher", "--alphas", "0.05,0.1",
                "--figure", str(target),
            ],
            capsys,
        )
        assert code == 0
        assert target.exists() and target.stat().st_size > 0

    def test_json_metadata(self, capsys):
        code, out, _ = run_cli(
            [
                "power", "--marginals", "5,4", "-N", "50", "--seed", "7",
                "--tests", "mtest", "--alphas", "0.05", "--format", "json",
            ],
            capsys,
        )
        obj = json.loads(out)
        md = obj["metadata"]
        assert md["seed"] == 7
        assert md["null_model"] == "null_shared"
        assert md["alternative_model"] == "alternative_independent"
        assert md["grid_points"] == 100


class TestBenchCommand:
    def test_runs_both_workloads(self, capsys):
        code, out, _ = run_cli(["bench"], capsys)
        assert code == 0
        header, rows = read_csv(out)
        assert len(rows) == 2
        assert int(rows[1][header.index("tables")]) == 17**5


class TestExitCodes:
    def test_usage_error_unknown_flag(self, capsys):
        assert run_cli(["p", "--tables", "1,1;1,1"], capsys)[0] == 2

    def test_usage_error_no_command(self, capsys):
        assert run_cli([], capsys)[0] == 2

    def test_capacity_error(self, capsys, monkeypatch):
        monkeypatch.setenv("MTEST_MAX_TABLES", "10")
        code, _, err = run_cli(["p", "--table", "5,5;5,5"], capsys)
        assert code == 3
        assert "capacity" in err

    def test_version(self, capsys):
        assert run_cli(["--version"], capsys)[0] == 0


class TestDeterminism:
    @pytest.mark.parametrize(
        "args",
        [
            ["p", "--table", "3,1;1,3"],
            ["grid", "--marginals", "6,5", "--format", "json"],
            [
                "power", "--marginals", "5,4", "-N", "200", "--seed", "11",
                "--tests", "mtest,fisher", "--alphas", "0.01,0.05",
            ],
        ],
    )
    def test_byte_identical_output(self, args, capsys):
        _, first, _ = run_cli(args, capsys)
        _, second, _ = run_cli(args, capsys)
        assert first == second
