"""Batch figure rendering from the evaluation pipeline's CSV schemas.

Three figure kinds, all pure render-to-file with no interactivity and no
metric recomputation: every annotated number is the CSV value formatted, not
a derived quantity.  Input schemas:

    strata_bars       method,bin,accuracy,macro_f1
    confusion_heatmap true_label,<class...>,other   (row-normalised fractions)
    length_histogram  length,count
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class SchemaError(Exception):
    """Input CSV does not match the figure kind's schema."""

    def __init__(self, message: str, column: str | None = None):
        self.column = column
        if column is not None:
            message = f"column {column!r}: {message}"
        super().__init__(message)


class FigureKind(enum.Enum):
    STRATA_BARS = "strata_bars"
    CONFUSION_HEATMAP = "confusion_heatmap"
    LENGTH_HISTOGRAM = "length_histogram"


@dataclass(frozen=True)
class FigureSpec:
    kind: FigureKind
    input_path: str | Path
    output_path: str | Path
    title: str = ""
    dpi: int = 150
    cmap: str = "viridis"

    def __post_init__(self):
        if not Path(self.input_path).exists():
            raise SchemaError(f"input file not found: {self.input_path}")
        if self.dpi < 10:
            raise SchemaError("dpi must be >= 10")


_BIN_ORDER = ("Head", "Mid", "Tail")


def _read_csv(path: str | Path) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError("CSV has no header row")
        rows = list(reader)
    if not rows:
        raise SchemaError("CSV has a header but no data rows")
    return list(reader.fieldnames), rows


def _require_columns(header: list[str], wanted: list[str]) -> None:
    for column in wanted:
        if column not in header:
            raise SchemaError("missing from header", column=column)


def _parse_float(row: dict[str, str], column: str) -> float:
    try:
        return float(row[column])
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"not numeric: {row.get(column)!r}", column=column) from exc


def heatmap_annotations(values: list[list[float]]) -> list[list[str]]:
    """Cell annotation strings: the CSV values at 2 decimals, nothing else."""
    return [[f"{v:.2f}" for v in row] for row in values]


def render(spec: FigureSpec) -> Path:
    """Render one figure; returns the written path.

    Validation happens before any output I/O, so a schema failure never
    leaves a file behind.
    """
    if spec.kind is FigureKind.STRATA_BARS:
        figure = _strata_figure(spec)
    elif spec.kind is FigureKind.CONFUSION_HEATMAP:
        figure = _confusion_figure(spec)
    elif spec.kind is FigureKind.LENGTH_HISTOGRAM:
        figure = _histogram_figure(spec)
    else:
        raise SchemaError(f"unsupported figure kind: {spec.kind}")
    out = Path(spec.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    figure.savefig(out, dpi=spec.dpi, metadata={"Software": "nameplots"})
    plt.close(figure)
    return out


def _strata_figure(spec: FigureSpec):
    header, rows = _read_csv(spec.input_path)
    _require_columns(header, ["method", "bin", "accuracy", "macro_f1"])
    for row in rows:
        if row["bin"] not in _BIN_ORDER:
            raise SchemaError(f"unknown frequency bin {row['bin']!r}", column="bin")
    methods: list[str] = []
    data: dict[tuple[str, str], tuple[float, float]] = {}
    for row in rows:
        if row["method"] not in methods:
            methods.append(row["method"])
        data[(row["method"], row["bin"])] = (
            _parse_float(row, "accuracy"),
            _parse_float(row, "macro_f1"),
        )

    fig, axes = plt.subplots(1, 2, figsize=(10, 4.2), sharey=True)
    x = np.arange(len(_BIN_ORDER))
    width = 0.8 / max(1, len(methods))
    for panel, (axis, metric_idx, label) in enumerate(
        zip(axes, (0, 1), ("Accuracy", "Macro-F1"))
    ):
        for m_idx, method in enumerate(methods):
            heights = [
                data.get((method, bin_name), (np.nan, np.nan))[metric_idx]
                for bin_name in _BIN_ORDER
            ]
            axis.bar(x + m_idx * width, heights, width, label=method)
        axis.set_xticks(x + width * (len(methods) - 1) / 2)
        axis.set_xticklabels(_BIN_ORDER)
        axis.set_xlabel("bin")
        axis.set_ylabel(label)
        axis.set_ylim(0, 1)
        if panel == 0:
            axis.legend(fontsize=8)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    return fig


def _confusion_figure(spec: FigureSpec):
    header, rows = _read_csv(spec.input_path)
    if not header or header[0] != "true_label":
        raise SchemaError("first column must be the true label", column="true_label")
    pred_columns = header[1:]
    if not pred_columns:
        raise SchemaError("no prediction columns", column="true_label")
    labels = [row["true_label"] for row in rows]
    values = [[_parse_float(row, col) for col in pred_columns] for row in rows]
    annotations = heatmap_annotations(values)

    matrix = np.array(values)
    fig, axis = plt.subplots(
        figsize=(0.55 * len(pred_columns) + 2.2, 0.5 * len(labels) + 1.8)
    )
    image = axis.imshow(matrix, cmap=spec.cmap, vmin=0.0, vmax=1.0)
    axis.set_xticks(range(len(pred_columns)))
    axis.set_xticklabels(pred_columns, rotation=90, fontsize=7)
    axis.set_yticks(range(len(labels)))
    axis.set_yticklabels(labels, fontsize=7)
    axis.set_xlabel("predicted")
    axis.set_ylabel("true_label")
    threshold = 0.5
    for i, row in enumerate(annotations):
        for j, text in enumerate(row):
            color = "white" if matrix[i, j] < threshold else "black"
            axis.text(j, i, text, ha="center", va="center", fontsize=6, color=color)
    fig.colorbar(image, ax=axis, fraction=0.046)
    if spec.title:
        axis.set_title(spec.title)
    fig.tight_layout()
    return fig


def _histogram_figure(spec: FigureSpec):
    header, rows = _read_csv(spec.input_path)
    _require_columns(header, ["length", "count"])
    pairs = sorted(
        ((_parse_float(row, "length"), _parse_float(row, "count")) for row in rows),
        key=lambda p: p[0],
    )
    lengths = [p[0] for p in pairs]
    counts = [p[1] for p in pairs]
    fig, axis = plt.subplots(figsize=(7, 4))
    axis.bar(lengths, counts, width=0.9)
    axis.set_xlabel("length")
    axis.set_ylabel("count")
    if spec.title:
        axis.set_title(spec.title)
    fig.tight_layout()
    return fig
