#!/usr/bin/env python3
"""Render figures from the solver's CSV tables.

Two kinds of plot, one per table contract:

  involutions   diagnostics.csv -> semilog-y time series of the three
                divergence residuals (omega, u, psi)
  convergence   *_conv.csv -> log-log error vs h with a reference slope

The script reads only the CSV files; it does not import the solver package.
Usage: plot.py involutions|convergence <csv> -o <png> [--order P] [--title T]
"""

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from typing import Optional

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

INVOLUTION_COLUMNS = ("div_omega_linf", "div_u_linf", "div_psi_linf")
SERIES_STYLE = {"div_omega_linf": ("tab:blue", "o"),
                "div_u_linf": ("tab:orange", "s"),
                "div_psi_linf": ("tab:green", "^")}


@dataclass
class PlotSpec:
    """Everything needed to render one figure."""
    csv_path: str
    kind: str                      # "involutions" or "convergence"
    out_path: str
    title: str = ""
    expected_order: Optional[float] = None


def read_table(path):
    """CSV -> (header, rows of floats keyed by column). Blank-file safe."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a CSV header")
        rows = [dict(zip(header, line)) for line in reader if line]
    return header, rows


def _column(rows, name):
    return [float(r[name]) for r in rows]


def observed_slope(hs, errs):
    """Least-squares slope of log(err) vs log(h); 0.0 for flat data."""
    pts = [(math.log(h), math.log(e)) for h, e in zip(hs, errs) if e > 0]
    if len(pts) < 2:
        return 0.0
    xs, ys = zip(*pts)
    n = len(pts)
    xbar, ybar = sum(xs) / n, sum(ys) / n
    den = sum((x - xbar) ** 2 for x in xs)
    if den == 0.0:
        return 0.0
    return sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys)) / den


def plot_involutions(csv_path, out_path, title=""):
    """Semilog-y plot of the three involution residuals against time."""
    header, rows = read_table(csv_path)
    missing = [c for c in ("time",) + INVOLUTION_COLUMNS if c not in header]
    if missing:
        raise ValueError(f"{csv_path}: missing columns {', '.join(missing)}")
    if not rows:
        raise ValueError(f"{csv_path}: no data rows to plot")

    t = _column(rows, "time")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name in INVOLUTION_COLUMNS:
        color, marker = SERIES_STYLE[name]
        ax.semilogy(t, _column(rows, name), color=color, marker=marker,
                    markersize=4, linewidth=1.2, label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("involution residual (L_inf)")
    ax.set_title(title or "divergence residuals over time")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    _save(fig, out_path)
    return out_path


def plot_convergence(csv_path, out_path, expected_order=None, title=""):
    """Log-log error-vs-h plot with a dashed reference slope line.

    Every column that is not the grid count or an *_order column is treated
    as an error series. The reference order defaults to the fitted slope of
    the first series, rounded to the nearest integer.
    """
    header, rows = read_table(csv_path)
    if len(rows) < 2:
        raise ValueError(f"{csv_path}: need at least 2 rows for a "
                         f"convergence plot, got {len(rows)}")
    grid_col = header[0]
    err_cols = [c for c in header[1:] if not c.endswith("_order")]
    if not err_cols:
        raise ValueError(f"{csv_path}: no error columns found")

    hs = [1.0 / float(r[grid_col]) for r in rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for name in err_cols:
        errs = _column(rows, name)
        ax.loglog(hs, errs, marker="o", markersize=4, linewidth=1.2,
                  label=f"{name} (slope {observed_slope(hs, errs):.2f})")

    if expected_order is None:
        expected_order = round(observed_slope(hs, _column(rows, err_cols[0])))
    anchor = _column(rows, err_cols[0])[0]
    ref = [anchor * (h / hs[0]) ** expected_order for h in hs]
    ax.loglog(hs, ref, "k--", linewidth=1.0,
              label=f"O(h^{expected_order:g})")

    ax.set_xlabel(f"h  (1 / {grid_col})")
    ax.set_ylabel("error")
    ax.set_title(title or "grid convergence")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, out_path)
    return out_path


def _save(fig, out_path):
    # strip the Software text chunk so reruns are byte-identical even
    # across matplotlib upgrades
    fig.savefig(out_path, dpi=150, bbox_inches="tight",
                metadata={"Software": None})
    plt.close(fig)


def render(spec: PlotSpec):
    if spec.kind == "involutions":
        return plot_involutions(spec.csv_path, spec.out_path, spec.title)
    if spec.kind == "convergence":
        return plot_convergence(spec.csv_path, spec.out_path,
                                spec.expected_order, spec.title)
    raise ValueError(f"unknown plot kind {spec.kind!r}")


def main(argv=None):
    p = argparse.ArgumentParser(
        description="Render solver CSV tables as figures.")
    p.add_argument("kind", choices=("involutions", "convergence"))
    p.add_argument("csv", help="input CSV file")
    p.add_argument("-o", "--out", required=True, help="output PNG path")
    p.add_argument("--order", type=float, default=None,
                   help="reference slope for convergence plots")
    p.add_argument("--title", default="")
    args = p.parse_args(argv)
    spec = PlotSpec(csv_path=args.csv, kind=args.kind, out_path=args.out,
                    title=args.title, expected_order=args.order)
    try:
        out = render(spec)
    except (OSError, ValueError) as exc:
        print(f"plot.py: error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
