#!/usr/bin/env python3
"""Render log-scale sample-complexity figures from experiment CSV output.

Reads the complexity-curve schema (``preset,n,kappa_label,lambda,epsilon,
N_min,...``) and draws minimum sample count against state dimension, one
line per distinct value of a chosen grouping column.  Output is
deterministic: identical CSV input produces byte-identical image files.

Usage:
    python3 plots/render.py --csv fig1.csv --group epsilon --out fig1.svg
"""

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

# A fixed salt keeps the ids matplotlib embeds in SVG output stable across
# processes, which is what makes re-renders byte-identical; keeping glyphs
# as text (not outline paths) keeps the files small and diffable.
plt.rcParams["svg.hashsalt"] = "render"
plt.rcParams["svg.fonttype"] = "none"

GROUP_COLUMNS = ("epsilon", "lambda", "kappa_label")
REQUIRED_COLUMNS = ("n", "N_min")


class RenderError(Exception):
    """Raised when the CSV cannot be turned into a figure."""


@dataclass(frozen=True)
class FigureSpec:
    csv_path: Path
    group: str
    out_path: Path
    log_y: bool = True


@dataclass
class RenderResult:
    """What was drawn: group labels in plot order and the y-axis scale."""

    labels: list[str] = field(default_factory=list)
    yscale: str = "log"


def read_curves(spec: FigureSpec):
    """Group (n, N_min) points by the grouping column, first-appearance order.

    Rows whose search did not resolve (empty ``N_min``) have no y value and
    are skipped.
    """
    with open(spec.csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise RenderError(f"{spec.csv_path}: empty file")
        for column in REQUIRED_COLUMNS + (spec.group,):
            if column not in header:
                raise RenderError(
                    f"{spec.csv_path}: no column {column!r} in header "
                    f"(have: {', '.join(header)})"
                )
        curves: dict[str, list[tuple[int, float]]] = {}
        for row in reader:
            if not row["N_min"]:
                continue
            curves.setdefault(row[spec.group], []).append(
                (int(row["n"]), float(row["N_min"]))
            )
    if not curves:
        raise RenderError(f"{spec.csv_path}: no plottable rows")
    return curves


def render(spec: FigureSpec) -> RenderResult:
    """Draw the figure described by ``spec`` and write it to ``spec.out_path``."""
    curves = read_curves(spec)
    result = RenderResult(yscale="log" if spec.log_y else "linear")

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    try:
        for value, points in curves.items():
            points.sort()
            label = f"{spec.group}={value}"
            ax.plot([p[0] for p in points], [p[1] for p in points],
                    marker="o", label=label)
            result.labels.append(label)
        ax.set_yscale(result.yscale)
        ax.set_xlabel("dimension n")
        ax.set_ylabel("samples N")
        ax.legend()
        fig.tight_layout()
        # Date-less metadata keeps SVG output reproducible; PNG (by suffix)
        # carries no timestamp to begin with.
        metadata = {"Date": None} if spec.out_path.suffix == ".svg" else None
        fig.savefig(spec.out_path, metadata=metadata)
    finally:
        plt.close(fig)
    return result


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Plot minimum sample count vs dimension from a curve CSV."
    )
    parser.add_argument("--csv", required=True, type=Path,
                        help="experiment CSV (complexity-curve schema)")
    parser.add_argument("--group", required=True,
                        help="column giving one line per distinct value "
                             f"(typically one of: {', '.join(GROUP_COLUMNS)})")
    parser.add_argument("--out", required=True, type=Path,
                        help="output image (.svg, or .png for raster)")
    parser.add_argument("--linear-y", action="store_true",
                        help="linear y axis (default: log scale)")
    args = parser.parse_args(argv)

    spec = FigureSpec(csv_path=args.csv, group=args.group,
                      out_path=args.out, log_y=not args.linear_y)
    try:
        result = render(spec)
    except (RenderError, OSError) as exc:
        print(f"render: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {spec.out_path} ({len(result.labels)} lines, "
          f"{result.yscale} y)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
