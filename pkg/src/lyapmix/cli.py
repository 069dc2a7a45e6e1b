"""Command-line harness for the three experiment families.

::

    lyapmix run --experiment gramian --problem heat2d:20x20 --prec DDD,SSS --out results
    lyapmix run --experiment random-rhs --problem heat1d:100 --ranks 1..10 --out results
    lyapmix plot results/gramian_heat2d-20x20/*.csv
    lyapmix export --problem heat1d:50 --out bundle

Exit status: 0 on success, 2 when some solves of a run failed, 1 on a
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import re
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from lyapmix import __version__
from lyapmix.adi import (
    TRIPLE_LABELS,
    ADIOptions,
    PrecisionTriple,
    adi_solve,
    explicit_residual_norm,
)
from lyapmix.dense import dense_cap, dense_lyap_oracle
from lyapmix.errors import ConvergenceError, OracleSizeError, SchemaError
from lyapmix.kernels import BACKEND
from lyapmix.lowrank import CompressionOptions, lr_compress, lr_to_dense
from lyapmix.plotting import SCHEMAS, emit_plot_script
from lyapmix.precision import DOUBLE
from lyapmix.problems import (
    gramian_problem,
    h2_norm,
    known_solution_problem,
    random_rhs_problem,
    solution_error,
    system_from_spec,
)
from lyapmix.shifts import ShiftSet, penzl_shifts

log = logging.getLogger("lyapmix")

EXPERIMENTS = tuple(SCHEMAS)
DEFAULT_SHIFTS = (40, 40, 20)
SMALL_SHIFTS = (20, 20, 10)
SMALL_N = 200
DEFAULT_RANKS = {"random-rhs": (1, 50), "random-sol": (1, 10)}
SUMMARY_COLUMNS = (
    "triple",
    "reason",
    "iterations",
    "order_r",
    "order_z",
    "res_impl",
    "res_expl",
    "h2",
    "runtime_ns",
    "oracle_err",
)


class ConfigError(ValueError):
    """Invalid command-line configuration."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    problem: str
    triples: tuple = TRIPLE_LABELS
    reltol: float = 1e-8
    maxiters: int | None = None
    shift_spec: tuple | None = None
    shift_file: str | None = None
    seed: int = 0
    ranks: tuple | None = None
    compress: int | None = None
    out: str = "results"
    oracle: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.triples:
            raise ConfigError("no precision triple given")
        for label in self.triples:
            if label not in TRIPLE_LABELS:
                raise ConfigError(f"precision triple must be one of {', '.join(TRIPLE_LABELS)}, got {label!r}")
        if not self.reltol > 0:
            raise ConfigError("reltol must be positive")
        if self.maxiters is not None and self.maxiters < 1:
            raise ConfigError("maxiters must be at least 1")
        if self.shift_spec is not None and self.shift_file is not None:
            raise ConfigError("--shifts and --shift-file are mutually exclusive")
        if self.shift_spec is not None:
            kplus, kminus, J = self.shift_spec
            if kplus < 0 or kminus < 0 or kplus + kminus == 0 or J < 1:
                raise ConfigError("shift spec needs kplus, kminus >= 0 (not both 0) and J >= 1")
        if self.compress is not None and self.compress < 1:
            raise ConfigError("compression interval must be at least 1")
        if self.ranks is not None:
            lo, hi = self.ranks
            if not 1 <= lo <= hi:
                raise ConfigError(f"rank sweep {lo}..{hi} is empty or starts below 1")
            if self.experiment == "random-rhs" and hi > 50:
                raise ConfigError("random-rhs ranks must lie in 1..50")

    @property
    def rank_range(self):
        lo, hi = self.ranks if self.ranks is not None else DEFAULT_RANKS[self.experiment]
        return range(lo, hi + 1)


def parse_ranks(text: str) -> tuple:
    m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+)\s*)?", text)
    if not m:
        raise ConfigError(f"rank sweep must look like LO..HI, got {text!r}")
    lo = int(m.group(1))
    hi = int(m.group(2)) if m.group(2) else lo
    return lo, hi


def parse_shift_spec(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"--shifts takes kplus,kminus,J, got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"--shifts takes three integers, got {text!r}") from None


def parse_triples(text: str) -> tuple:
    if text.strip().lower() == "all":
        return TRIPLE_LABELS
    return tuple(dict.fromkeys(t.strip().upper() for t in text.split(",") if t.strip()))


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "-", text).strip("-")


def result_name(cfg: ExperimentConfig, label: str, maxiters: int) -> str:
    compression = "false" if cfg.compress is None else str(cfg.compress)
    return f"ADI-{label}_compression={compression}_maxiters={maxiters}_reltol={cfg.reltol:g}_"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _options(cfg, maxiters, record_explicit):
    return ADIOptions(
        reltol=cfg.reltol,
        maxiters=maxiters,
        compression=cfg.compress is not None,
        compression_interval=cfg.compress or 10,
        record_explicit=record_explicit,
    )


def prepare_shifts(cfg: ExperimentConfig, sys_, outdir: Path):
    """Load or compute the shared shift file. Returns ``(ShiftSet, path, meta)``."""
    if cfg.shift_file is not None:
        shifts = ShiftSet.load(cfg.shift_file)
        return shifts, Path(cfg.shift_file), {"source": "file", "path": str(cfg.shift_file)}
    scaled = cfg.shift_spec is None and sys_.n < SMALL_N
    if cfg.shift_spec is not None:
        spec = cfg.shift_spec
    else:
        spec = SMALL_SHIFTS if scaled else DEFAULT_SHIFTS
    kplus, kminus, J = spec
    path = outdir / f"shifts_{_slug(cfg.problem)}_kplus={kplus}_kminus={kminus}_J={J}_seed={cfg.seed}.txt"
    meta = {
        "source": "heuristic",
        "kplus": kplus,
        "kminus": kminus,
        "J": J,
        "scaled_default": scaled,
        "path": path.name,
    }
    if path.exists():
        return ShiftSet.load(path), path, meta
    shifts = penzl_shifts(sys_.E, sys_.A, kplus, kminus, J, seed=cfg.seed)
    shifts.save(path)
    return shifts, path, meta


def run_gramian(cfg, sys_, shifts, outdir: Path, maxiters: int):
    """One iteration table per triple plus a shared summary table."""
    P = gramian_problem(sys_)
    failures = []
    summary = []
    oracle = None
    oracle_note = None
    if cfg.oracle:
        try:
            oracle = dense_lyap_oracle(P.E, P.A, P.G, P.S)
        except OracleSizeError as exc:
            oracle_note = str(exc)
            log.warning("oracle skipped: %s", exc)
    csvs = []
    for label in cfg.triples:
        name = result_name(cfg, label, maxiters)
        t0 = time.perf_counter_ns()
        try:
            F, trace = adi_solve(P, PrecisionTriple.from_label(label), shifts, _options(cfg, maxiters, True))
        except (ConvergenceError, ArithmeticError) as exc:
            runtime = time.perf_counter_ns() - t0
            failures.append({"triple": label, "error": str(exc)})
            summary.append((label, f"failed: {exc}", "", "", "", "", "", "", runtime, ""))
            log.error("%s failed: %s", label, exc)
            continue
        runtime = time.perf_counter_ns() - t0
        path = outdir / f"{name}.csv"
        _write_csv(path, SCHEMAS["gramian"], [(r.iter, r.res_impl, r.res_expl) for r in trace.rows])
        csvs.append(path)
        err = None
        if oracle is not None:
            err = np.linalg.norm(lr_to_dense(F) - oracle) / np.linalg.norm(oracle)
        summary.append(
            (
                label,
                trace.reason,
                trace.iterations,
                trace.residual.order,
                F.order,
                trace.res_impl,
                trace.res_expl,
                h2_norm(sys_, F),
                runtime,
                err,
            )
        )
        log.info("%s: %s after %d iterations, res_impl=%.3e res_expl=%.3e", label, trace.reason,
                 trace.iterations, trace.res_impl, trace.res_expl)
    summary_path = outdir / f"summary_compression={'false' if cfg.compress is None else cfg.compress}_maxiters={maxiters}_reltol={cfg.reltol:g}_.csv"
    _merge_summary(summary_path, summary)
    return csvs, failures, {"summary": summary_path.name, "oracle_note": oracle_note}


def _merge_summary(path: Path, rows):
    """Add rows to the summary table, replacing earlier rows of the same triple."""
    existing = {}
    if path.exists():
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                existing[row["triple"]] = [row[c] for c in SUMMARY_COLUMNS]
    for row in rows:
        existing[row[0]] = [_fmt(v) if not isinstance(v, str) else v for v in row]
    order = sorted(existing, key=lambda t: (TRIPLE_LABELS.index(t) if t in TRIPLE_LABELS else 99, t))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for t in order:
            w.writerow(existing[t])


def run_random_rhs(cfg, sys_, shifts, outdir: Path, maxiters: int):
    """One row per rank ``g`` with the final residuals and the solve time."""
    csvs, failures = [], []
    for label in cfg.triples:
        prec = PrecisionTriple.from_label(label)
        rows = []
        for g in cfg.rank_range:
            P = random_rhs_problem(sys_, g, cfg.seed)
            t0 = time.perf_counter_ns()
            try:
                F, trace = adi_solve(P, prec, shifts, _options(cfg, maxiters, False))
            except (ConvergenceError, ArithmeticError) as exc:
                failures.append({"triple": label, "rank": g, "error": str(exc)})
                log.error("%s rank %d failed: %s", label, g, exc)
                continue
            runtime = time.perf_counter_ns() - t0
            res_expl = explicit_residual_norm(P, F) / P.rhs_norm()
            rows.append((g, trace.res_impl, res_expl, runtime))
            log.info("%s g=%d: res_impl=%.3e res_expl=%.3e", label, g, trace.res_impl, res_expl)
        path = outdir / f"{result_name(cfg, label, maxiters)}.csv"
        _write_csv(path, SCHEMAS["random-rhs"], rows)
        csvs.append(path)
    return csvs, failures, {}


def run_random_sol(cfg, sys_, shifts, outdir: Path, maxiters: int):
    """One row per prescribed rank with errors of the raw and compressed iterate."""
    csvs, failures = [], []
    exact = CompressionOptions(qr_precision=DOUBLE, inner_precision=DOUBLE)
    for label in cfg.triples:
        prec = PrecisionTriple.from_label(label)
        rows = []
        for zhat in cfg.rank_range:
            P, Xhat = known_solution_problem(sys_, zhat, cfg.seed)
            t0 = time.perf_counter_ns()
            try:
                F, trace = adi_solve(P, prec, shifts, _options(cfg, maxiters, False))
            except (ConvergenceError, ArithmeticError) as exc:
                failures.append({"triple": label, "rank": zhat, "error": str(exc)})
                log.error("%s rank %d failed: %s", label, zhat, exc)
                continue
            runtime = time.perf_counter_ns() - t0
            Ft = lr_compress(F.astype(DOUBLE, DOUBLE), exact)
            rows.append(
                (
                    zhat,
                    solution_error(Xhat, F),
                    solution_error(Xhat, Ft),
                    F.order - zhat,
                    Ft.order - zhat,
                    runtime,
                )
            )
            log.info("%s zhat=%d: err=%.3e err_tr=%.3e", label, zhat, rows[-1][1], rows[-1][2])
        path = outdir / f"{result_name(cfg, label, maxiters)}.csv"
        _write_csv(path, SCHEMAS["random-sol"], rows)
        csvs.append(path)
    return csvs, failures, {}


RUNNERS = {"gramian": run_gramian, "random-rhs": run_random_rhs, "random-sol": run_random_sol}


def run(cfg: ExperimentConfig) -> int:
    """Execute one configured run; returns the process exit status."""
    try:
        sys_ = system_from_spec(cfg.problem)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    maxiters = cfg.maxiters
    if maxiters is None:
        maxiters = 200 if cfg.problem.strip().lower().startswith("triplechain") else 50
    outdir = Path(cfg.out) / f"{cfg.experiment}_{_slug(cfg.problem)}"
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        shifts, shift_path, shift_meta = prepare_shifts(cfg, sys_, outdir)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"shifts: {exc}") from None
    csvs, failures, extra = RUNNERS[cfg.experiment](cfg, sys_, shifts, outdir, maxiters)
    if csvs:
        emit_plot_script(sorted(outdir.glob("ADI-*.csv")), outdir / f"plot_{cfg.experiment}.py")
    meta = {
        "version": __version__,
        "kernels": BACKEND,
        "config": asdict(cfg),
        "maxiters": maxiters,
        "n": sys_.n,
        "shifts": {**shift_meta, "values": list(shifts)},
        "dense_cap": dense_cap(),
        "failures": failures,
        **extra,
    }
    stem = f"meta_{'-'.join(cfg.triples)}.json"
    (outdir / stem).write_text(json.dumps(meta, indent=2, default=str) + "\n")
    return 2 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lyapmix", description="Mixed-precision low-rank ADI experiments.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run an experiment")
    r.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    r.add_argument("--problem", required=True, help="heat1d:N, heat2d:NXxNY or triplechain:L")
    r.add_argument("--prec", default="all", help="comma-separated triples (DDD,SDD,SSD,SSS) or 'all'")
    r.add_argument("--reltol", type=float, default=1e-8)
    r.add_argument("--maxiters", type=int, default=None)
    shifts = r.add_mutually_exclusive_group()
    shifts.add_argument("--shifts", metavar="KPLUS,KMINUS,J", default=None)
    shifts.add_argument("--shift-file", metavar="PATH", default=None)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--ranks", metavar="LO..HI", default=None)
    r.add_argument("--compress", metavar="INTERVAL", nargs="?", type=int, const=10, default=None)
    r.add_argument("--oracle", action="store_true", help="compare with the dense solution (gramian, n <= cap)")
    r.add_argument("--out", default="results")

    p = sub.add_parser("plot", help="write a matplotlib script for result CSVs")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", default=None, help="script path (default: next to the first CSV)")

    e = sub.add_parser("export", help="export a problem as Matrix Market + CSV bundle")
    e.add_argument("--problem", required=True)
    e.add_argument("--experiment", choices=EXPERIMENTS, default="gramian")
    e.add_argument("--rank", type=int, default=1)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", required=True)
    return parser


def _config_from_args(args) -> ExperimentConfig:
    return ExperimentConfig(
        experiment=args.experiment,
        problem=args.problem,
        triples=parse_triples(args.prec),
        reltol=args.reltol,
        maxiters=args.maxiters,
        shift_spec=parse_shift_spec(args.shifts) if args.shifts else None,
        shift_file=args.shift_file,
        seed=args.seed,
        ranks=parse_ranks(args.ranks) if args.ranks else None,
        compress=args.compress,
        out=args.out,
        oracle=args.oracle,
    )


def _export(args) -> int:
    sys_ = system_from_spec(args.problem)
    if args.experiment == "gramian":
        P = gramian_problem(sys_)
    elif args.experiment == "random-rhs":
        P = random_rhs_problem(sys_, args.rank, args.seed)
    else:
        P, Xhat = known_solution_problem(sys_, args.rank, args.seed)
        Xhat.save(Path(args.out) / "solution")
    P.save(args.out)
    print(args.out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "run":
            return run(_config_from_args(args))
        if args.command == "plot":
            print(emit_plot_script(args.csv, args.out))
            return 0
        return _export(args)
    except (ConfigError, SchemaError, FileNotFoundError) as exc:
        print(f"lyapmix: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        if args.command == "export":
            print(f"lyapmix: error: {exc}", file=sys.stderr)
            return 1
        raise


if __name__ == "__main__":
    sys.exit(main())
