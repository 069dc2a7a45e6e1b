import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from lyapmix import cli
from lyapmix.cli import ConfigError, ExperimentConfig, main, parse_ranks, parse_shift_spec, parse_triples
from lyapmix.errors import ConvergenceError, SchemaError
from lyapmix.plotting import emit_plot_script

SMALL = ["--shifts", "10,10,6"]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def header(path):
    with open(path, "rb") as fh:
        return fh.readline()


def outdir(tmp_path, experiment, problem):
    return tmp_path / f"{experiment}_{problem.replace(':', '-')}"


def results(d, label):
    (path,) = d.glob(f"ADI-{label}_*.csv")
    return path


def test_parsers():
    assert parse_ranks("3..7") == (3, 7)
    assert parse_shift_spec("20,40,10") == (20, 40, 10)
    assert parse_triples("all") == ("DDD", "SDD", "SSD", "SSS")
    assert parse_triples("sss,DDD") == ("SSS", "DDD")
    assert parse_ranks("4") == (4, 4)
    for bad in ("a..b", "1..", "-1..3"):
        with pytest.raises(ConfigError):
            parse_ranks(bad)
    for bad in ("1,2", "x,1,1", "1,2,3,4"):
        with pytest.raises(ConfigError):
            parse_shift_spec(bad)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"reltol": 0.0},
        {"maxiters": 0},
        {"experiment": "random-rhs", "ranks": (1, 51)},
        {"compress": 0},
        {"shift_spec": (2, 2, 2), "shift_file": "x.txt"},
        {"experiment": "nope"},
        {"ranks": (5, 2)},
        {"ranks": (0, 2)},
        {"shift_spec": (0, 0, 3)},
        {"shift_spec": (4, 4, 0)},
        {"triples": ("DSD",)},
        {"triples": ()},
    ],
)
def test_config_validation(kwargs):
    base = {"experiment": "gramian", "problem": "heat1d:20"}
    base.update(kwargs)
    with pytest.raises(ConfigError):
        ExperimentConfig(**base)


def test_default_rank_ranges():
    assert ExperimentConfig("random-rhs", "heat1d:10").rank_range == range(1, 51)
    assert ExperimentConfig("random-sol", "heat1d:10").rank_range == range(1, 11)


def test_result_name():
    cfg = ExperimentConfig("gramian", "heat1d:10", compress=10, reltol=1e-8)
    assert cli.result_name(cfg, "SDD", 50) == "ADI-SDD_compression=10_maxiters=50_reltol=1e-08_"
    cfg = ExperimentConfig("gramian", "heat1d:10")
    assert cli.result_name(cfg, "DDD", 7) == "ADI-DDD_compression=false_maxiters=7_reltol=1e-08_"


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--experiment", "gramian", "--problem", "heat1d:20", "--reltol", "-1"],
        ["run", "--experiment", "gramian", "--problem", "heat9d:20"],
        ["run", "--experiment", "random-rhs", "--problem", "heat1d:20", "--ranks", "1..60"],
        ["run", "--experiment", "gramian", "--problem", "heat1d:20", "--prec", "XYZ"],
        ["run", "--experiment", "gramian", "--problem", "heat1d:20", "--shifts", "1,1,1", "--shift-file", "f"],
        ["run", "--experiment", "bogus", "--problem", "heat1d:20"],
        ["plot"],
    ],
)
def test_bad_arguments_exit_1(argv, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        sys.exit(main(argv + ["--out", str(tmp_path)] if argv[0] == "run" else argv))
    assert exc.value.code == 1


def test_gramian_run_files_and_headers(tmp_path):
    argv = ["run", "--experiment", "gramian", "--problem", "heat1d:60", *SMALL, "--out", str(tmp_path)]
    assert main(argv) == 0
    d = outdir(tmp_path, "gramian", "heat1d:60")
    for label in ("DDD", "SDD", "SSD", "SSS"):
        path = d / f"ADI-{label}_compression=false_maxiters=50_reltol=1e-08_.csv"
        assert header(path) == b"iter,res_impl,res_expl\n"
        rows = read_rows(path)
        assert [int(r["iter"]) for r in rows] == list(range(1, len(rows) + 1))
    (summary,) = d.glob("summary_*.csv")
    assert header(summary) == (",".join(cli.SUMMARY_COLUMNS) + "\n").encode()
    rows = read_rows(summary)
    assert [r["triple"] for r in rows] == ["DDD", "SDD", "SSD", "SSS"]
    assert all(r["reason"] == "converged" for r in rows)
    # every triple consumed the same shift sequence to the same depth
    assert len({r["iterations"] for r in rows}) == 1
    assert len(list(d.glob("shifts_*.txt"))) == 1
    meta = json.loads((d / "meta_DDD-SDD-SSD-SSS.json").read_text())
    assert meta["n"] == 60 and meta["failures"] == [] and meta["shifts"]["J"] == 6
    assert (d / "plot_gramian.py").exists()


def test_gramian_reltol_one_single_iteration(tmp_path):
    argv = ["run", "--experiment", "gramian", "--problem", "heat1d:30", *SMALL, "--reltol", "1", "--prec", "DDD",
            "--out", str(tmp_path)]
    assert main(argv) == 0
    rows = read_rows(results(outdir(tmp_path, "gramian", "heat1d:30"), "DDD"))
    assert len(rows) == 1


def test_rerun_reuses_shifts_and_reproduces(tmp_path):
    argv = ["run", "--experiment", "random-sol", "--problem", "heat1d:40", "--ranks", "1..2", *SMALL,
            "--prec", "DDD", "--out", str(tmp_path)]
    assert main(argv) == 0
    d = outdir(tmp_path, "random-sol", "heat1d:40")
    (shift_file,) = d.glob("shifts_*.txt")
    first = read_rows(results(d, "DDD"))
    stamp = shift_file.stat().st_mtime_ns
    assert main(argv) == 0
    assert shift_file.stat().st_mtime_ns == stamp
    second = read_rows(results(d, "DDD"))
    strip = lambda rows: [{k: v for k, v in r.items() if k != "runtime_ns"} for r in rows]
    assert strip(first) == strip(second)


def test_shift_file_option(tmp_path):
    shifts = tmp_path / "s.txt"
    shifts.write_text("-0.5\n-2.0\n")
    argv = ["run", "--experiment", "gramian", "--problem", "heat1d:20", "--shift-file", str(shifts),
            "--prec", "DDD", "--out", str(tmp_path)]
    assert main(argv) == 0
    meta = json.loads((outdir(tmp_path, "gramian", "heat1d:20") / "meta_DDD.json").read_text())
    assert meta["shifts"]["values"] == [-0.5, -2.0]
    assert main(argv[:-4] + ["--shift-file", str(tmp_path / "missing.txt"), "--out", str(tmp_path)]) == 1


def test_compress_naming(tmp_path):
    argv = ["run", "--experiment", "gramian", "--problem", "heat1d:30", *SMALL, "--prec", "DDD", "--compress",
            "--out", str(tmp_path)]
    assert main(argv) == 0
    d = outdir(tmp_path, "gramian", "heat1d:30")
    assert (d / "ADI-DDD_compression=10_maxiters=50_reltol=1e-08_.csv").exists()


def test_inner_failure_exit_2(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise ConvergenceError("forced", residual=1.0, column=0)

    monkeypatch.setattr("lyapmix.adi.gmres_solve", boom)
    argv = ["run", "--experiment", "gramian", "--problem", "heat1d:20", "--shift-file", "", "--prec", "SSS",
            "--out", str(tmp_path)]
    shifts = tmp_path / "s.txt"
    shifts.write_text("-1.0\n")
    argv[argv.index("")] = str(shifts)
    assert main(argv) == 2
    d = outdir(tmp_path, "gramian", "heat1d:20")
    meta = json.loads((d / "meta_SSS.json").read_text())
    assert meta["failures"][0]["triple"] == "SSS"
    (summary,) = d.glob("summary_*.csv")
    assert read_rows(summary)[0]["reason"].startswith("failed")


def test_oracle_skipped_above_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("LYAPMIX_DENSE_CAP", "10")
    argv = ["run", "--experiment", "gramian", "--problem", "heat1d:20", *SMALL, "--prec", "DDD", "--oracle",
            "--out", str(tmp_path)]
    assert main(argv) == 0
    d = outdir(tmp_path, "gramian", "heat1d:20")
    assert json.loads((d / "meta_DDD.json").read_text())["oracle_note"]
    assert read_rows(next(d.glob("summary_*.csv")))[0]["oracle_err"] == ""


def test_oracle_error_recorded(tmp_path):
    argv = ["run", "--experiment", "gramian", "--problem", "heat1d:30", *SMALL, "--prec", "DDD", "--oracle",
            "--out", str(tmp_path)]
    assert main(argv) == 0
    row = read_rows(next(outdir(tmp_path, "gramian", "heat1d:30").glob("summary_*.csv")))[0]
    assert float(row["oracle_err"]) < 1e-7


@pytest.fixture(scope="module")
def random_rhs_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("rhs")
    argv = ["run", "--experiment", "random-rhs", "--problem", "heat1d:100", "--prec", "DDD,SSS", "--out", str(out)]
    assert main(argv) == 0
    return outdir(out, "random-rhs", "heat1d:100")


def _ratios(d, label):
    rows = read_rows(results(d, label))
    assert [int(r["rank"]) for r in rows] == list(range(1, 51))
    return np.array([float(r["res_expl"]) / float(r["res_impl"]) for r in rows])


def test_random_rhs_headers_and_double_agreement(random_rhs_run):
    assert header(results(random_rhs_run, "DDD")) == b"rank,res_impl,res_expl,runtime_ns\n"
    r = _ratios(random_rhs_run, "DDD")
    assert np.all(r <= 10) and np.all(r >= 0.1)


@pytest.mark.xfail(
    strict=True,
    reason="single-precision drift varies with the random factor; a few ranks stay below a 100x gap",
)
def test_random_rhs_single_gap_every_rank(random_rhs_run):
    assert np.all(_ratios(random_rhs_run, "SSS") >= 100)


def test_random_rhs_single_gap_typical(random_rhs_run):
    r = _ratios(random_rhs_run, "SSS")
    assert np.median(r) >= 100 and r.min() >= 10


def test_random_sol_example(tmp_path):
    argv = ["run", "--experiment", "random-sol", "--problem", "heat1d:100", "--ranks", "5..5", "--prec", "DDD",
            "--out", str(tmp_path)]
    assert main(argv) == 0
    d = outdir(tmp_path, "random-sol", "heat1d:100")
    path = results(d, "DDD")
    assert header(path) == b"rank,err,err_tr,delta_rank,delta_rank_tr,runtime_ns\n"
    (row,) = read_rows(path)
    assert float(row["err"]) <= 1e-6 and np.isfinite(float(row["err_tr"]))
    meta = json.loads((d / "meta_DDD.json").read_text())
    assert meta["failures"] == []
    assert int(row["delta_rank"]) >= 0 and int(row["delta_rank_tr"]) <= int(row["delta_rank"])


def test_plot_errors(tmp_path):
    with pytest.raises(ValueError):
        emit_plot_script([])
    bad = tmp_path / "ADI-DDD_bad.csv"
    bad.write_text("iter,res_impl\n1,0.5\n")
    with pytest.raises(SchemaError):
        emit_plot_script([bad])
    g = tmp_path / "ADI-DDD_g.csv"
    g.write_text("iter,res_impl,res_expl\n1,0.5,0.5\n")
    r = tmp_path / "ADI-SSS_r.csv"
    r.write_text("rank,res_impl,res_expl,runtime_ns\n1,0.5,0.5,10\n")
    with pytest.raises(SchemaError):
        emit_plot_script([g, r])
    assert main(["plot", str(bad)]) == 1


def _series(script):
    ns = {}
    for line in script.read_text().splitlines():
        if line.startswith("SERIES = ") or line.startswith("PANELS = "):
            exec(line, ns)
    return ns["SERIES"], ns["PANELS"]


def test_plot_layout_and_legend_order(tmp_path):
    paths = []
    for label in ("SSS", "DDD", "SSD", "SDD"):
        p = tmp_path / f"ADI-{label}_compression=false_maxiters=5_reltol=1e-08_.csv"
        p.write_text("iter,res_impl,res_expl\n1,1e-1,2e-1\n2,1e-3,3e-3\n")
        paths.append(p)
    script = emit_plot_script(paths)
    series, panels = _series(script)
    assert [s[0] for s in series] == ["DDD", "SDD", "SSD", "SSS"]
    assert len(panels) == 2
    assert all(not s[1].startswith("/") for s in series)

    mpl = pytest.importorskip("matplotlib")
    assert mpl
    proc = subprocess.run([sys.executable, str(script)], capture_output=True, text=True, cwd=tmp_path.parent)
    assert proc.returncode == 0, proc.stderr
    assert script.with_suffix(".png").stat().st_size > 0


def test_plot_random_sol_layout(tmp_path):
    p = tmp_path / "ADI-SSD_x.csv"
    p.write_text("rank,err,err_tr,delta_rank,delta_rank_tr,runtime_ns\n1,1e-5,1e-5,3,0,100\n")
    out = tmp_path / "sub" / "plot.py"
    script = emit_plot_script([p], out)
    assert script == out
    series, panels = _series(script)
    assert series == [("SSD", "../ADI-SSD_x.csv")]
    assert [cols for _, cols, _ in panels] == [["err", "err_tr"], ["delta_rank", "delta_rank_tr"], ["runtime_ns"]]
    assert panels[1][2] is False


def test_export(tmp_path):
    out = tmp_path / "bundle"
    assert main(["export", "--problem", "heat1d:12", "--experiment", "random-sol", "--rank", "2", "--out", str(out)]) == 0
    from lyapmix.adi import LyapunovProblem
    from lyapmix.lowrank import LDLTFactorization

    P = LyapunovProblem.load(out)
    X = LDLTFactorization.load(out / "solution")
    assert P.n == 12 and X.Z.shape[0] == 12
    assert main(["export", "--problem", "heat1d:12", "--experiment", "random-rhs", "--rank", "60", "--out",
                 str(out)]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lyapmix", "run", "--experiment", "gramian"], capture_output=True)
    assert proc.returncode == 1
