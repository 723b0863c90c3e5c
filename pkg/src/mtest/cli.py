"""Command-line interface.

Subcommands: ``p`` (p-value of one table), ``grid`` (all probabilities of a
2x2 space), ``count`` (table-space size), ``simulate`` (random tables and
optionally their p-values), ``power`` (ROC/power comparison of the m-test
against Fisher and Barnard) and ``bench`` (timings of two reference
workloads).

Output is CSV on stdout by default, or a single JSON object with
``--format json``.  Numbers are printed with 15 significant digits and the
same command line always produces the same bytes (bench timings aside).
``grid`` and ``power`` can additionally render a figure with ``--figure``.

Exit codes: 0 success, 2 usage error, 3 capacity error, 4 numeric error.
The MTEST_MAX_TABLES environment variable overrides the enumeration cap.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np
import scipy

from . import __version__
from .enumeration import (
    MAX_TABLES_ENV,
    TIE_TOLERANCE,
    PValueResult,
    count_tables,
    one_sided_pvalue,
    probability_grid,
    two_sided_pvalue,
)
from .exactprob import CapacityError, MarginalSpec, NumericError, TableCounts
from .baselines import DEFAULT_GRID_POINTS
from .montecarlo import (
    HYPOTHESES,
    SimConfig,
    power_study,
    pvalues_for_tables,
    roc_power,
    simulate,
)

__all__ = ["main", "entry", "parse_table", "UsageError"]


class UsageError(ValueError):
    """Malformed user input (tables, marginals, option values)."""


def parse_table(text: str) -> TableCounts:
    """Parse 'r1c1,r1c2,...;r2c1,...' into a table (row 1 = successes).

    Raises UsageError naming the offending token and its position.
    """
    if text is None or not text.strip():
        raise UsageError("empty table text")
    rows = []
    for r, row_text in enumerate(text.strip().split(";"), start=1):
        row = []
        for c, token in enumerate(row_text.split(","), start=1):
            token = token.strip()
            try:
                value = int(token)
            except ValueError:
                raise UsageError(
                    f"row {r}, entry {c}: {token!r} is not an integer"
                ) from None
            if value < 0:
                raise UsageError(f"row {r}, entry {c}: counts must be >= 0, got {value}")
            row.append(value)
        rows.append(tuple(row))
    width = len(rows[0])
    for r, row in enumerate(rows, start=1):
        if len(row) != width:
            raise UsageError(f"row {r} has {len(row)} entries, expected {width} (ragged table)")
    try:
        return TableCounts(tuple(rows))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def format_table(t: TableCounts) -> str:
    """Inverse of parse_table."""
    return ";".join(",".join(str(v) for v in row) for row in t.counts)


def _parse_marginals(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(tok) for tok in text.split(","))
    except ValueError:
        raise UsageError(f"marginals must be comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise UsageError(f"marginals must all be >= 1, got {text!r}")
    return values


def _parse_alphas(text: str) -> list[float]:
    try:
        alphas = [float(tok) for tok in text.split(",")]
    except ValueError:
        raise UsageError(f"alphas must be comma-separated numbers, got {text!r}") from None
    if any(not 0.0 < a <= 1.0 for a in alphas):
        raise UsageError("alphas must lie in (0, 1]")
    if alphas != sorted(alphas):
        raise UsageError("alphas must be ascending")
    return alphas


_DEFAULT_ALPHAS = [round(0.005 * i, 3) for i in range(1, 201)]


def _fmt(x: float) -> str:
    return f"{x:.15g}"


def _jfloat(x: float) -> float:
    return float(_fmt(x))


def _metadata(**extra) -> dict:
    md = {
        "versions": {
            "mtest": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "tie_tolerance": TIE_TOLERANCE,
        "max_tables_env": MAX_TABLES_ENV,
    }
    md.update(extra)
    return md


def _emit_csv(header: list[str], rows: list[list]) -> None:
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


def _emit_json(obj: dict) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _result_fields(res: PValueResult) -> dict:
    return {
        "sided": res.sided,
        "p_value": _jfloat(res.p_value),
        "log_p_value": _jfloat(res.log_p_value),
        "p_value_unclamped": _jfloat(res.p_value_unclamped),
        "offset_log_prob": _jfloat(res.offset_log_prob),
        "tables_total": res.tables_total,
        "tables_included": res.tables_included,
    }


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _pvalue_for(table: TableCounts, sided: str, threads: int) -> PValueResult:
    if sided == "one":
        if table.d != 2 or table.m != 2:
            raise UsageError("one-sided p-values are defined for 2x2 tables only")
        (s1, s2), (f1, f2) = table.counts
        return one_sided_pvalue(s1, f1, s2, f2)
    return two_sided_pvalue(table, threads=threads)


def cmd_p(args: argparse.Namespace) -> int:
    table = parse_table(args.table)
    res = _pvalue_for(table, args.sided, args.threads)
    if args.format == "json":
        _emit_json(
            {
                "command": "p",
                "table": format_table(table),
                "result": _result_fields(res),
                "metadata": _metadata(),
            }
        )
    else:
        fields = _result_fields(res)
        _emit_csv(
            list(fields),
            [[fields["sided"]] + [_fmt(fields[k]) for k in
                ("p_value", "log_p_value", "p_value_unclamped", "offset_log_prob")]
             + [fields["tables_total"], fields["tables_included"]]],
        )
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    marginals = _parse_marginals(args.marginals)
    if len(marginals) != 2:
        raise UsageError("grid requires exactly two column marginals")
    spec = MarginalSpec(marginals)
    rows = probability_grid(spec, args.sided)
    if args.figure:
        from .figures import save_grid_figure

        save_grid_figure(rows, (marginals[0], marginals[1]), args.sided, args.figure)
    if args.format == "json":
        _emit_json(
            {
                "command": "grid",
                "marginals": list(marginals),
                "sided": args.sided,
                "rows": [
                    {
                        "s1": s1,
                        "s2": s2,
                        "probability": _jfloat(p),
                        "log_probability": _jfloat(lp),
                    }
                    for s1, s2, p, lp in rows
                ],
                "metadata": _metadata(grid_size=len(rows)),
            }
        )
    else:
        _emit_csv(
            ["s1", "s2", "probability", "log_probability"],
            [[s1, s2, _fmt(p), _fmt(lp)] for s1, s2, p, lp in rows],
        )
    return 0


def cmd_count(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    total = count_tables(spec)
    if args.format == "json":
        _emit_json(
            {
                "command": "count",
                "marginals": list(spec.n),
                "rows": spec.d,
                "tables": total,
                "metadata": _metadata(),
            }
        )
    else:
        _emit_csv(
            ["rows", "marginals", "tables"],
            [[spec.d, ",".join(str(v) for v in spec.n), total]],
        )
    return 0


def _spec_from_args(args: argparse.Namespace) -> MarginalSpec:
    marginals = _parse_marginals(args.marginals)
    try:
        return MarginalSpec(marginals, d=args.rows)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    try:
        cfg = SimConfig(spec, args.sims, args.hypothesis, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    tables = list(simulate(cfg))
    pvals = None
    if args.pvalues:
        if args.sided == "one" and (spec.d != 2 or spec.m != 2):
            raise UsageError("one-sided p-values are defined for 2x2 tables only")
        pvals = pvalues_for_tables(tables, "mtest", args.sided, threads=args.threads)
    meta = _metadata(
        seed=args.seed,
        hypothesis=args.hypothesis,
        n_sims=args.sims,
        sided=args.sided if args.pvalues else None,
    )
    if args.format == "json":
        out_rows = []
        for i, t in enumerate(tables, start=1):
            row = {"sim": i, "table": format_table(t)}
            if pvals is not None:
                row["p_value"] = _jfloat(float(pvals[i - 1]))
            out_rows.append(row)
        _emit_json(
            {"command": "simulate", "tables": out_rows, "metadata": meta}
        )
    else:
        header = ["sim", "table"] + (["p_value"] if pvals is not None else [])
        rows = []
        for i, t in enumerate(tables, start=1):
            row = [i, format_table(t)]
            if pvals is not None:
                row.append(_fmt(float(pvals[i - 1])))
            rows.append(row)
        _emit_csv(header, rows)
    return 0


def cmd_power(args: argparse.Namespace) -> int:
    marginals = _parse_marginals(args.marginals)
    if len(marginals) != 2:
        raise UsageError("power comparisons are defined for 2x2 spaces")
    spec = MarginalSpec(marginals)
    tests = [tok.strip() for tok in args.tests.split(",") if tok.strip()]
    for test in tests:
        if test not in ("mtest", "fisher", "barnard"):
            raise UsageError(f"unknown test {test!r} (choose from mtest, fisher, barnard)")
    alphas = _parse_alphas(args.alphas) if args.alphas else _DEFAULT_ALPHAS
    study = power_study(spec, args.sims, args.seed, tests, args.grid_points, args.threads)
    rows = []
    for test in tests:
        p_null, p_alt = study[test]
        rows.extend(roc_power(p_null, p_alt, alphas, test))
    if args.figure:
        from .figures import save_power_figure

        save_power_figure(rows, args.figure)
    meta = _metadata(
        seed=args.seed,
        n_sims=args.sims,
        grid_points=args.grid_points,
        null_model="null_shared",
        alternative_model="alternative_independent",
        barnard_statistic="pooled-variance score",
    )
    if args.format == "json":
        _emit_json(
            {
                "command": "power",
                "rows": [
                    {
                        "alpha": _jfloat(r.alpha),
                        "test": r.test,
                        "tpr": _jfloat(r.tpr),
                        "fpr": _jfloat(r.fpr),
                    }
                    for r in rows
                ],
                "metadata": meta,
            }
        )
    else:
        _emit_csv(
            ["alpha", "test", "tpr", "fpr"],
            [[_fmt(r.alpha), r.test, _fmt(r.tpr), _fmt(r.fpr)] for r in rows],
        )
    return 0


_BENCH_WORKLOADS = [
    ("2x2 marginals 400", TableCounts(((200, 200), (200, 200)))),
    ("2x5 marginals 16", TableCounts(((8, 8, 8, 8, 8), (8, 8, 8, 8, 8)))),
]


def cmd_bench(args: argparse.Namespace) -> int:
    rows = []
    for name, table in _BENCH_WORKLOADS:
        start = time.perf_counter()
        res = two_sided_pvalue(table, threads=args.threads)
        elapsed = time.perf_counter() - start
        rows.append((name, res.tables_total, elapsed, res.p_value))
    if args.format == "json":
        _emit_json(
            {
                "command": "bench",
                "rows": [
                    {
                        "workload": name,
                        "tables": total,
                        "seconds": _jfloat(elapsed),
                        "p_value": _jfloat(p),
                    }
                    for name, total, elapsed, p in rows
                ],
                "metadata": _metadata(threads=args.threads),
            }
        )
    else:
        _emit_csv(
            ["workload", "tables", "seconds", "p_value"],
            [[name, total, _fmt(elapsed), _fmt(p)] for name, total, elapsed, p in rows],
        )
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--format", choices=("csv", "json"), default="csv",
                     help="output format (default csv)")
    sub.add_argument("--threads", type=int, default=1,
                     help="worker threads; results do not depend on this")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtest",
        description="Exact unconditional m-test for binomial contingency tables.",
    )
    parser.add_argument("--version", action="version", version=f"mtest {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("p", help="p-value of an observed table")
    p.add_argument("--table", required=True,
                   help="counts as 'r1c1,r1c2,...;r2c1,...' (row 1 = successes)")
    p.add_argument("--sided", choices=("two", "one"), default="two")
    _add_common(p)
    p.set_defaults(handler=cmd_p)

    grid = subs.add_parser("grid", help="all probabilities of a 2x2 table space")
    grid.add_argument("--marginals", required=True, help="two column totals, e.g. 10,7")
    grid.add_argument("--sided", choices=("two", "one"), default="two")
    grid.add_argument("--figure", help="also render the grid to this image file")
    _add_common(grid)
    grid.set_defaults(handler=cmd_grid)

    count = subs.add_parser("count", help="number of tables with given marginals")
    count.add_argument("--marginals", required=True, help="column totals, e.g. 16,16,16,16,16")
    count.add_argument("--rows", type=int, default=2, help="outcome count d (default 2)")
    _add_common(count)
    count.set_defaults(handler=cmd_count)

    sim = subs.add_parser("simulate", help="simulate tables under a model")
    sim.add_argument("--marginals", required=True, help="column totals, e.g. 10,7")
    sim.add_argument("--rows", type=int, default=2, help="outcome count d (default 2)")
    sim.add_argument("-N", "--sims", type=int, required=True, help="number of tables")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--hypothesis", choices=HYPOTHESES, default="null_shared")
    sim.add_argument("--pvalues", action="store_true",
                     help="add the m-test p-value of each table")
    sim.add_argument("--sided", choices=("two", "one"), default="two",
                     help="sidedness of --pvalues")
    _add_common(sim)
    sim.set_defaults(handler=cmd_simulate)

    power = subs.add_parser("power", help="ROC/power comparison on simulated tables")
    power.add_argument("--marginals", required=True, help="two column totals, e.g. 10,7")
    power.add_argument("-N", "--sims", type=int, required=True,
                       help="simulations per hypothesis")
    power.add_argument("--seed", type=int, default=0)
    power.add_argument("--tests", default="mtest,fisher,barnard",
                       help="comma list from mtest, fisher, barnard")
    power.add_argument("--alphas", help="comma list of significance levels (ascending)")
    power.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS,
                       help="Barnard nuisance-grid resolution")
    power.add_argument("--figure", help="also render ROC/power panels to this image file")
    _add_common(power)
    power.set_defaults(handler=cmd_power)

    bench = subs.add_parser("bench", help="time the two reference workloads")
    _add_common(bench)
    bench.set_defaults(handler=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
