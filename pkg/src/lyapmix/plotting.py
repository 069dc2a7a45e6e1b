"""Generate matplotlib scripts for the experiment CSVs.

The emitted script is self-contained (``csv`` + ``matplotlib`` only) and
refers to the data files by paths relative to its own location, so an
output directory can be moved around as a whole.
"""

from __future__ import annotations

import csv
import os
import re
from pathlib import Path

from lyapmix.errors import SchemaError

SCHEMAS = {
    "gramian": ("iter", "res_impl", "res_expl"),
    "random-rhs": ("rank", "res_impl", "res_expl", "runtime_ns"),
    "random-sol": ("rank", "err", "err_tr", "delta_rank", "delta_rank_tr", "runtime_ns"),
}

# (x column, [(panel title, [y columns], log y)])
LAYOUTS = {
    "gramian": (
        "iter",
        [
            ("implicit residual", ["res_impl"], True),
            ("explicit residual", ["res_expl"], True),
        ],
    ),
    "random-rhs": (
        "rank",
        [
            ("implicit residual", ["res_impl"], True),
            ("explicit residual", ["res_expl"], True),
            ("runtime [s]", ["runtime_ns"], True),
        ],
    ),
    "random-sol": (
        "rank",
        [
            ("relative error", ["err", "err_tr"], True),
            ("order overhead", ["delta_rank", "delta_rank_tr"], False),
            ("runtime [s]", ["runtime_ns"], True),
        ],
    ),
}

LEGEND_ORDER = ("DDD", "SDD", "SSD", "SSS")
_LABEL_RE = re.compile(r"ADI-([DS]{3})_")


def read_header(path) -> tuple:
    with open(path, newline="") as fh:
        row = next(csv.reader(fh), None)
    if row is None:
        raise SchemaError(f"{path}: empty file, no header")
    return tuple(row)


def detect_schema(header) -> str:
    """Name of the experiment whose column set is exactly `header`."""
    header = tuple(header)
    for name, cols in SCHEMAS.items():
        if header == cols:
            return name
    for name, cols in SCHEMAS.items():
        if cols[0] in header[:1]:
            missing = [c for c in cols if c not in header]
            if missing:
                raise SchemaError(f"columns {missing} missing for a {name} table (header {list(header)})")
    raise SchemaError(f"header {list(header)} matches no known experiment table")


def series_label(path) -> str:
    m = _LABEL_RE.search(Path(path).name)
    return m.group(1) if m else Path(path).stem


def _sort_key(path):
    label = series_label(path)
    rank = LEGEND_ORDER.index(label) if label in LEGEND_ORDER else len(LEGEND_ORDER)
    return rank, label, str(path)


_TEMPLATE = '''"""Plot {experiment} results. Generated by lyapmix; run with python3."""

import csv
import os

import matplotlib

matplotlib.use(os.environ.get("MPLBACKEND", "Agg"))
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
SERIES = {series!r}
X = {x!r}
PANELS = {panels!r}
OUTPUT = {output!r}


def load(path):
    with open(os.path.join(HERE, path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {{k: [float(r[k]) for r in rows] for k in rows[0]}} if rows else {{}}


def main():
    fig, axes = plt.subplots(len(PANELS), 1, figsize=(6, 3 * len(PANELS)), sharex=True, squeeze=False)
    for label, path in SERIES:
        data = load(path)
        if not data:
            continue
        for ax, (title, cols, logy) in zip(axes[:, 0], PANELS):
            for col in cols:
                y = data[col]
                if col == "runtime_ns":
                    y = [v * 1e-9 for v in y]
                name = label if len(cols) == 1 else label + " " + col
                ax.plot(data[X], y, marker=".", label=name)
    for ax, (title, cols, logy) in zip(axes[:, 0], PANELS):
        if logy:
            ax.set_yscale("log")
        ax.set_ylabel(title)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize="small")
    axes[-1, 0].set_xlabel(X)
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, OUTPUT))
    print(os.path.join(HERE, OUTPUT))


if __name__ == "__main__":
    main()
'''


def emit_plot_script(csv_paths, out_path=None) -> Path:
    """Write a plotting script for CSVs that all share one experiment schema.

    One series per file, legend order DDD, SDD, SSD, SSS (other labels
    after, alphabetically). `out_path` defaults to ``plot_<experiment>.py``
    next to the first CSV. Returns the script path.

    Raises
    ------
    ValueError
        `csv_paths` is empty.
    SchemaError
        A header lacks the columns of its experiment, or the files mix
        experiments.
    """
    paths = [Path(p) for p in csv_paths]
    if not paths:
        raise ValueError("no CSV files to plot")
    kinds = {detect_schema(read_header(p)) for p in paths}
    if len(kinds) != 1:
        raise SchemaError(f"CSV files mix experiment tables: {sorted(kinds)}")
    (experiment,) = kinds
    out_path = Path(out_path) if out_path is not None else paths[0].parent / f"plot_{experiment}.py"
    base = out_path.resolve().parent
    series = [
        (series_label(p), os.path.relpath(p.resolve(), base)) for p in sorted(paths, key=_sort_key)
    ]
    x, panels = LAYOUTS[experiment]
    text = _TEMPLATE.format(
        experiment=experiment,
        series=series,
        x=x,
        panels=panels,
        output=out_path.with_suffix(".png").name,
    )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(text)
    return out_path
