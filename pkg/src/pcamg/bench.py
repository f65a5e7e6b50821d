"""Benchmark harness: problem loading, single-run rows, and manifest-driven
suites with deterministic CSV/JSON output."""

from __future__ import annotations

import argparse
import csv
import io
import json
import shlex
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .adaptive import (
    AdaptiveConfig,
    SolveReport,
    THRESHOLD_PRESETS,
    baseline_uaamg,
    solve_general,
    solve_homogeneous,
)
from .graphs import RhsKind, grid_laplacian, make_rhs, preprocess, read_edge_list, read_matrix_market, ring_graph
from .sparse import SparseMatrix

__all__ = [
    "BenchSpec",
    "BenchRow",
    "BenchError",
    "SuiteResult",
    "CSV_HEADER",
    "JSON_SCHEMA",
    "SOLVERS",
    "load_problem",
    "parse_rhs",
    "run_bench",
    "run_suite",
    "bench_arg_parser",
    "spec_from_args",
]

CSV_HEADER = "problem,n,nnz,solver,rhs,iter,resetups,convr_last10,oc_avg,wall_time_s,converged"
JSON_SCHEMA = "pcamg-bench-1"
SOLVERS = ("baseline", "adaptive:every", "adaptive:balanced", "adaptive:homog")


def _csv_line(fields) -> str:
    """One RFC-4180 CSV record (fields with commas get quoted)."""
    buf = io.StringIO()
    csv.writer(buf, lineterminator="").writerow(fields)
    return buf.getvalue()


@dataclass
class BenchSpec:
    """One benchmark entry: what to solve and how."""

    problem: str
    rhs: str = "lowfreq"
    solver: str = "baseline"
    tol: float = 1e-8
    max_iter: int = 2500
    seed: int = 0
    threshold: float | None = None
    a2_row_cap: int | None = None

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; expected one of {SOLVERS}")
        kind = parse_rhs(self.rhs, self.seed)
        if self.solver == "adaptive:homog" and kind.variant != "zero":
            raise ValueError("adaptive:homog requires --rhs zero")
        if self.solver != "adaptive:homog" and kind.variant == "zero":
            raise ValueError(f"--rhs zero is only valid with adaptive:homog, not {self.solver}")


@dataclass
class BenchRow:
    """One CSV/JSON row plus the full report behind it."""

    problem: str
    n: int
    nnz: int
    solver: str
    rhs: str
    iter: int
    resetups: int
    convr_last10: float
    oc_avg: float
    wall_time_s: float
    converged: bool
    report: SolveReport = field(repr=False, compare=False, default=None)

    def csv(self) -> str:
        return _csv_line(
            [
                self.problem,
                str(self.n),
                str(self.nnz),
                self.solver,
                self.rhs,
                str(self.iter),
                str(self.resetups),
                repr(self.convr_last10),
                repr(self.oc_avg),
                repr(self.wall_time_s),
                "true" if self.converged else "false",
            ]
        )

    def as_dict(self) -> dict:
        return {
            "problem": self.problem,
            "n": self.n,
            "nnz": self.nnz,
            "solver": self.solver,
            "rhs": self.rhs,
            "iter": self.iter,
            "resetups": self.resetups,
            "convr_last10": self.convr_last10,
            "oc_avg": self.oc_avg,
            "wall_time_s": self.wall_time_s,
            "converged": self.converged,
        }


@dataclass
class BenchError:
    """A manifest entry that failed before producing a report."""

    line_no: int
    entry: str
    message: str

    def csv(self) -> str:
        return f"# error line {self.line_no}: {self.message}"

    def as_dict(self) -> dict:
        return {"line_no": self.line_no, "entry": self.entry, "error": self.message}


@dataclass
class SuiteResult:
    rows: list

    @property
    def errors(self):
        return [r for r in self.rows if isinstance(r, BenchError)]

    @property
    def bench_rows(self):
        return [r for r in self.rows if isinstance(r, BenchRow)]

    def summary(self) -> dict:
        ok = self.bench_rows
        return {
            "entries": len(self.rows),
            "converged": sum(1 for r in ok if r.converged),
            "capped": sum(1 for r in ok if not r.converged),
            "errors": len(self.errors),
        }

    def csv(self) -> str:
        lines = [CSV_HEADER]
        lines += [r.csv() for r in self.rows]
        s = self.summary()
        lines.append(
            f"# suite: entries={s['entries']} converged={s['converged']} "
            f"capped={s['capped']} errors={s['errors']}"
        )
        return "\n".join(lines) + "\n"

    def json_obj(self) -> dict:
        return {
            "schema_version": JSON_SCHEMA,
            "rows": [r.as_dict() for r in self.rows],
            "summary": self.summary(),
        }

    def exit_code(self) -> int:
        if self.errors:
            return 1
        if any(not r.converged for r in self.bench_rows):
            return 2
        return 0


def parse_rhs(rhs: str, default_seed=0) -> RhsKind:
    """CLI rhs grammar: lowfreq | random[:SEED] | zero."""
    if rhs == "lowfreq":
        return RhsKind("low_frequency")
    if rhs == "zero":
        return RhsKind("zero")
    if rhs == "random":
        return RhsKind("zero_sum_random", default_seed)
    if rhs.startswith("random:"):
        try:
            return RhsKind("zero_sum_random", int(rhs.split(":", 1)[1]))
        except ValueError:
            raise ValueError(f"bad random seed in rhs spec {rhs!r}") from None
    raise ValueError(f"unknown rhs {rhs!r}; expected lowfreq, random[:SEED], or zero")


def load_problem(problem: str) -> SparseMatrix:
    """CLI problem grammar: grid:NX,NY | ring:N | mtx:PATH | edges:PATH."""
    kind, _, arg = problem.partition(":")
    if not arg:
        raise ValueError(f"problem spec {problem!r} needs an argument after ':'")
    if kind == "grid":
        parts = arg.split(",")
        if len(parts) != 2:
            raise ValueError(f"grid spec must be grid:NX,NY, got {problem!r}")
        return grid_laplacian(int(parts[0]), int(parts[1]))
    if kind == "ring":
        return ring_graph(int(arg))
    if kind == "mtx":
        return preprocess(read_matrix_market(arg))
    if kind == "edges":
        return preprocess(read_edge_list(arg))
    raise ValueError(f"unknown problem kind {kind!r}; expected grid, ring, mtx, or edges")


def _config_for(spec: BenchSpec) -> AdaptiveConfig:
    presets = {
        "adaptive:every": THRESHOLD_PRESETS["every-step"],
        "adaptive:balanced": THRESHOLD_PRESETS["balanced"],
        "adaptive:homog": THRESHOLD_PRESETS["homogeneous"],
        "baseline": THRESHOLD_PRESETS["balanced"],  # unused by the baseline
    }
    threshold = spec.threshold if spec.threshold is not None else presets[spec.solver]
    return AdaptiveConfig(
        tol=spec.tol,
        max_iter=spec.max_iter,
        threshold=threshold,
        a2_row_cap=spec.a2_row_cap,
    )


def run_bench(spec: BenchSpec) -> BenchRow:
    """Execute one benchmark entry and wrap the report as a table row.

    Timing covers setup and solve but not problem loading or file I/O.
    """
    A = load_problem(spec.problem)
    n = A.n_rows
    kind = parse_rhs(spec.rhs, spec.seed)
    cfg = _config_for(spec)
    if spec.solver == "adaptive:homog":
        x0 = _kernels.lcg_uniform(spec.seed, n)
        _, report = solve_homogeneous(A, x0, cfg)
    else:
        b = make_rhs(kind, n)
        x0 = np.zeros(n)
        if spec.solver == "baseline":
            _, report = baseline_uaamg(A, b, x0, cfg)
        else:
            _, report = solve_general(A, b, x0, cfg)
    return BenchRow(
        problem=spec.problem,
        n=n,
        nnz=A.nnz,
        solver=spec.solver,
        rhs=spec.rhs,
        iter=report.iterations,
        resetups=report.resetups,
        convr_last10=report.convr_last10,
        oc_avg=report.oc_avg,
        wall_time_s=report.wall_time,
        converged=report.converged,
        report=report,
    )


def bench_arg_parser(prog="pcamg bench", require_problem=True) -> argparse.ArgumentParser:
    """Parser for one benchmark spec; the manifest reuses the same grammar."""
    p = argparse.ArgumentParser(prog=prog, add_help=False)
    p.add_argument("--problem", required=require_problem, default=None,
                   help="grid:NX,NY | ring:N | mtx:PATH | edges:PATH")
    p.add_argument("--rhs", default="lowfreq", help="lowfreq | random[:SEED] | zero")
    p.add_argument("--solver", default="baseline", choices=SOLVERS)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=2500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=None, help="override the solver preset")
    p.add_argument("--a2-row-cap", type=int, default=None, help="per-row fill cap for the squared pattern")
    return p


def spec_from_args(args) -> BenchSpec:
    return BenchSpec(
        problem=args.problem,
        rhs=args.rhs,
        solver=args.solver,
        tol=args.tol,
        max_iter=args.max_iter,
        seed=args.seed,
        threshold=args.threshold,
        a2_row_cap=args.a2_row_cap,
    )


def iter_manifest(path):
    """Yield (line_no, text) for each runnable manifest line."""
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            yield line_no, text


def run_suite(manifest_path, jobs=1) -> SuiteResult:
    """Run every manifest entry; failures are recorded and the suite goes on.

    Each line uses the bench flag grammar, e.g.
    ``--problem grid:64,64 --rhs lowfreq --solver baseline --tol 1e-8``.
    """
    parser = bench_arg_parser(prog="manifest")
    entries = []
    rows = []
    for line_no, text in iter_manifest(manifest_path):
        try:
            args = parser.parse_args(shlex.split(text))
            entries.append((line_no, text, spec_from_args(args)))
        except SystemExit:  # argparse reports to stderr and exits
            rows.append((line_no, BenchError(line_no, text, "bad flags")))
            entries.append(None)
            continue
        except ValueError as exc:
            rows.append((line_no, BenchError(line_no, text, str(exc))))
            entries.append(None)
            continue

    runnable = [e for e in entries if e is not None]
    if jobs > 1 and len(runnable) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_entry, runnable))
    else:
        results = [_run_entry(e) for e in runnable]
    rows.extend(results)
    rows.sort(key=lambda pair: pair[0])
    return SuiteResult([r for _, r in rows])


def _run_entry(entry):
    line_no, text, spec = entry
    try:
        return line_no, run_bench(spec)
    except Exception as exc:  # recorded, suite continues
        return line_no, BenchError(line_no, text, str(exc))


def suite_json_text(result: SuiteResult) -> str:
    return json.dumps(result.json_obj(), indent=2) + "\n"
