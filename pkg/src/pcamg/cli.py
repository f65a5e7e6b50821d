"""Command-line interface: graph generation, single solves, and benchmarks.

Exit codes: 0 converged, 2 iteration cap reached, 1 error. The PCAMG_LOG
environment variable (debug/info/warning/error) controls verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .bench import (
    BenchRow,
    CSV_HEADER,
    JSON_SCHEMA,
    SuiteResult,
    bench_arg_parser,
    run_bench,
    run_suite,
    spec_from_args,
    suite_json_text,
)
from .graphs import ParseError, grid_laplacian, ring_graph, write_matrix_market

log = logging.getLogger("pcamg")


def _configure_logging():
    level_name = os.environ.get("PCAMG_LOG", "warning").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(name)s %(levelname)s: %(message)s")


def _build_parser():
    parser = argparse.ArgumentParser(prog="pcamg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a graph and write it as Matrix Market")
    gen.add_argument("--problem", required=True, help="grid:NX,NY | ring:N")
    gen.add_argument("--output", required=True, help="output .mtx path")

    solve = sub.add_parser("solve", parents=[bench_arg_parser()], help="run one solve, report to stdout")

    bench = sub.add_parser(
        "bench",
        parents=[bench_arg_parser(require_problem=False)],
        help="emit a machine-readable benchmark row or suite",
    )
    bench.add_argument("--manifest", default=None, help="file of bench flag lines; runs the whole suite")
    bench.add_argument("--out", default="csv", choices=("csv", "json"), help="stdout format")
    bench.add_argument("--output", default=None, help="also write the stdout text to this path")
    bench.add_argument("--report", default=None, metavar="DIR",
                       help="write CSV, JSON and a convergence figure into DIR")
    bench.add_argument("--jobs", type=int, default=1, help="parallel workers for manifest entries")
    return parser, solve


def _gen(args) -> int:
    kind, _, spec = args.problem.partition(":")
    if kind == "grid":
        nx, ny = (int(t) for t in spec.split(","))
        L = grid_laplacian(nx, ny)
        comment = f"pcamg grid {nx}x{ny}"
    elif kind == "ring":
        L = ring_graph(int(spec))
        comment = f"pcamg ring {spec}"
    else:
        print(f"error: gen supports grid:NX,NY or ring:N, got {args.problem!r}", file=sys.stderr)
        return 1
    write_matrix_market(args.output, L, comment=comment)
    print(f"wrote {args.output} (n={L.n_rows}, nnz={L.nnz})")
    return 0


def _solve(args) -> int:
    spec = spec_from_args(args)
    row = run_bench(spec)
    rep = row.report
    print(f"problem   {row.problem} (n={row.n}, nnz={row.nnz})")
    print(f"solver    {row.solver}  rhs={row.rhs}  tol={spec.tol:g}")
    print(f"iterations {row.iter}  re-setups {row.resetups}")
    print(f"final residual {rep.residual_history[-1]:.3e}  converged {row.converged}")
    print(f"convr(last10) {row.convr_last10:.4f}  oc(avg) {row.oc_avg:.3f}  wall {row.wall_time_s:.3f}s")
    return 0 if row.converged else 2


def _write_report(report_dir, result, name):
    from .plots import save_convergence_figure

    outdir = Path(report_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / f"{name}.csv"
    json_path = outdir / f"{name}.json"
    fig_path = outdir / "convergence.png"
    csv_path.write_text(result.csv(), encoding="utf-8")
    json_path.write_text(suite_json_text(result), encoding="utf-8")
    histories = [
        (f"{r.problem} {r.solver} {r.rhs}", r.report.residual_history)
        for r in result.bench_rows
        if r.report is not None
    ]
    save_convergence_figure(histories, fig_path)
    return [csv_path, json_path, fig_path]


def _bench(args) -> int:
    if args.manifest:
        result = run_suite(args.manifest, jobs=args.jobs)
        name = "suite"
    else:
        if not args.problem:
            print("error: bench needs --problem or --manifest", file=sys.stderr)
            return 1
        result = SuiteResult([run_bench(spec_from_args(args))])
        name = "bench"
    text = result.csv() if args.out == "csv" else suite_json_text(result)
    sys.stdout.write(text)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    if args.report:
        for p in _write_report(args.report, result, name):
            log.info("wrote %s", p)
    return result.exit_code()


def main(argv=None) -> int:
    _configure_logging()
    parser, _ = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        if args.command == "gen":
            return _gen(args)
        if args.command == "solve":
            return _solve(args)
        return _bench(args)
    except (ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
