"""Turn a benchmark CSV into the ratio-vs-error chart.

Input is the harness CSV (one row per measurement); the chart shows, per
algorithm, the mean competitive ratio against the normalized prediction
error in percent, with a shaded band of one population standard deviation.
Rows whose optimum is only a lower bound (oracle_kind carries "+optlb") are
excluded, mirroring the harness summary.
"""

from __future__ import annotations

import csv
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import click
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

REQUIRED_COLUMNS = (
    "dataset",
    "instance_id",
    "seed",
    "alpha",
    "eta",
    "eta_norm",
    "algorithm",
    "cost",
    "opt",
    "ratio",
    "runtime_ms",
    "oracle_kind",
)


class SchemaError(ValueError):
    """The CSV lacks a required column."""


class NoDataError(ValueError):
    """Nothing to plot once filters are applied."""


@dataclass(frozen=True)
class FigureSpec:
    csv_path: str
    out_path: str
    dataset: str | None = None
    y_label: str = "competitive ratio"
    x_label: str = "η / |X̂| (%)"


def load_rows(csv_path: str) -> list[dict]:
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in REQUIRED_COLUMNS:
            if column not in header:
                raise SchemaError(f"missing column {column!r}")
        return list(reader)


def summarize_rows(rows: list[dict]) -> dict[tuple[str, int], tuple[float, float, int]]:
    """(algorithm, bucket%) -> (mean, population std, count) over the ratio."""
    groups: dict[tuple[str, int], list[float]] = {}
    for row in rows:
        if "+optlb" in row["oracle_kind"]:
            continue
        bucket = round(float(row["eta_norm"]) * 100)
        groups.setdefault((row["algorithm"], bucket), []).append(float(row["ratio"]))
    out = {}
    for key, vals in groups.items():
        mean = sum(vals) / len(vals)
        std = math.sqrt(sum((v - mean) ** 2 for v in vals) / len(vals))
        out[key] = (mean, std, len(vals))
    return out


def render_figure(spec: FigureSpec) -> str:
    rows = load_rows(spec.csv_path)
    if spec.dataset is not None:
        rows = [r for r in rows if r["dataset"] == spec.dataset]
    summary = summarize_rows(rows)
    if not summary:
        raise NoDataError(
            f"no data to plot from {spec.csv_path}"
            + (f" for dataset {spec.dataset!r}" if spec.dataset else "")
        )

    algorithms = sorted({a for a, _ in summary})
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for algorithm in algorithms:
        points = sorted(
            (bucket, *summary[(a, bucket)])
            for a, bucket in summary
            if a == algorithm
        )
        xs = [p[0] for p in points]
        means = [p[1] for p in points]
        stds = [p[2] for p in points]
        ax.plot(xs, means, marker="o", label=algorithm)
        ax.fill_between(
            xs,
            [m - s for m, s in zip(means, stds)],
            [m + s for m, s in zip(means, stds)],
            alpha=0.2,
        )
    ax.set_xlabel(spec.x_label)
    ax.set_ylabel(spec.y_label)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=120)
    plt.close(fig)
    return spec.out_path


@click.command()
@click.option("--csv", "csv_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=str)
@click.option("--dataset", default=None, type=str)
def main(csv_path: str, out_path: str, dataset: str | None):
    """Render the mean-ratio chart with one-std bands from a benchmark CSV."""
    spec = FigureSpec(csv_path=csv_path, out_path=out_path, dataset=dataset)
    try:
        render_figure(spec)
    except (SchemaError, NoDataError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
