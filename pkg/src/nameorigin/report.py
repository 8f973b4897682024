"""Rendering of evaluation results: Markdown tables, plot CSVs, JSON bundles.

The renderer never recomputes metrics; every emitted value is copied from a
report in the bundle.  Multi-seed runs aggregate to "mean ± sd" cells with
the sample (n-1) standard deviation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import MissingAnalysis, UnknownTableKind
from .evaluation import EvalReport

BUNDLE_VERSION = 1

TABLE_KINDS = ("results", "strata", "confusion_pairs", "region_lift")
PLOT_KINDS = ("strata_bars", "confusion_matrix", "length_histogram")
_BIN_ORDER = ("Head", "Mid", "Tail")


@dataclass
class ReportEntry:
    method: str
    seed: int | None
    report: EvalReport


@dataclass
class ReportBundle:
    entries: list[ReportEntry] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def methods(self) -> list[str]:
        seen: list[str] = []
        for entry in self.entries:
            if entry.method not in seen:
                seen.append(entry.method)
        return seen

    def by_method(self, method: str) -> list[ReportEntry]:
        return [e for e in self.entries if e.method == method]

    def to_dict(self) -> dict:
        return {
            "version": BUNDLE_VERSION,
            "provenance": self.provenance,
            "entries": [
                {"method": e.method, "seed": e.seed, "report": e.report.to_dict()}
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ReportBundle":
        return cls(
            entries=[
                ReportEntry(e["method"], e["seed"], EvalReport.from_dict(e["report"]))
                for e in payload["entries"]
            ],
            provenance=payload.get("provenance", {}),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", "utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ReportBundle":
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))


def mean_sd(values: Sequence[float]) -> tuple[float, float]:
    """Sample mean and sample (n-1) standard deviation; sd is 0 for n <= 1."""
    n = len(values)
    mean = sum(values) / n
    if n <= 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def aggregate_seeds(bundle: ReportBundle) -> dict[str, dict[str, tuple[float, float]]]:
    """Per-method mean/sd of scalar metrics across seeds."""
    out: dict[str, dict[str, tuple[float, float]]] = {}
    for method in bundle.methods():
        entries = bundle.by_method(method)
        metrics: dict[str, list[float]] = {}
        for entry in entries:
            rep = entry.report
            metrics.setdefault("accuracy", []).append(rep.accuracy)
            metrics.setdefault("macro_f1", []).append(rep.macro_f1)
            for k, v in rep.precision_at.items():
                metrics.setdefault(f"precision_at_{k}", []).append(v)
            if rep.strata is not None:
                for bin_name, bm in rep.strata.per_bin.items():
                    if bm is not None:
                        metrics.setdefault(f"accuracy_{bin_name}", []).append(bm.accuracy)
                        metrics.setdefault(f"macro_f1_{bin_name}", []).append(bm.macro_f1)
                if rep.strata.delta_head_tail is not None:
                    metrics.setdefault("delta_head_tail", []).append(rep.strata.delta_head_tail)
                if rep.strata.drop_pct is not None:
                    metrics.setdefault("drop_pct", []).append(rep.strata.drop_pct)
        out[method] = {name: mean_sd(vals) for name, vals in metrics.items()}
    return out


def _cell(mean: float, sd: float, multi: bool, decimals: int = 3) -> str:
    if multi:
        return f"{mean:.{decimals}f} ± {sd:.{decimals}f}"
    return f"{mean:.{decimals}f}"


def render_markdown(bundle: ReportBundle, table_kind: str) -> str:
    if not bundle.entries:
        raise MissingAnalysis("empty bundle")
    if table_kind == "results":
        return _render_results(bundle)
    if table_kind == "strata":
        return _render_strata(bundle)
    if table_kind == "confusion_pairs":
        return _render_confusion_pairs(bundle)
    if table_kind == "region_lift":
        return _render_region_lift(bundle)
    raise UnknownTableKind(f"no such table kind: {table_kind!r} (know {TABLE_KINDS})")


def _render_results(bundle: ReportBundle) -> str:
    stats = aggregate_seeds(bundle)
    ks = sorted(
        {k for e in bundle.entries for k in e.report.precision_at if k != 1}
    )
    header = ["Method", "Accuracy", "Macro-F1"] + [f"Precision@{k}" for k in ks]
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join(["---"] * len(header)) + "|"]
    for method in bundle.methods():
        multi = len(bundle.by_method(method)) > 1
        row = [method]
        for key in ["accuracy", "macro_f1"] + [f"precision_at_{k}" for k in ks]:
            if key in stats[method]:
                mean, sd = stats[method][key]
                row.append(_cell(mean, sd, multi))
            else:
                row.append("—")
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def _render_strata(bundle: ReportBundle) -> str:
    stats = aggregate_seeds(bundle)
    header = ["Method", "Head", "Mid", "Tail", "Δ(H-T)", "Drop%"]
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join(["---"] * len(header)) + "|"]
    for method in bundle.methods():
        if "accuracy_Head" not in stats[method]:
            raise MissingAnalysis(f"no strata analysis in reports for {method!r}")
        multi = len(bundle.by_method(method)) > 1
        row = [method]
        for bin_name in _BIN_ORDER:
            mean, sd = stats[method][f"accuracy_{bin_name}"]
            row.append(_cell(mean, sd, multi))
        d_mean, d_sd = stats[method]["delta_head_tail"]
        row.append(_cell(d_mean, d_sd, multi))
        p_mean, _ = stats[method]["drop_pct"]
        row.append(f"{p_mean:.1f}%")
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def _render_confusion_pairs(bundle: ReportBundle) -> str:
    blocks: list[str] = []
    for method in bundle.methods():
        entry = bundle.by_method(method)[0]
        pairs = entry.report.confusion_pairs
        if pairs is None:
            raise MissingAnalysis(f"no confusion-pair analysis for {method!r}")
        lines = [f"**{method}**", "",
                 "| True → Pred | Count | Same |",
                 "|---|---|---|"]
        for pair in pairs.pairs:
            mark = "✓" if pair.same_region else "×"
            lines.append(f"| {pair.true_label} → {pair.predicted} | {pair.count} | {mark} |")
        if pairs.region_agreement is not None:
            lines.append(f"| Region Agreement | {pairs.region_agreement:.3f} | |")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def _render_region_lift(bundle: ReportBundle) -> str:
    header = ["Category"] + bundle.methods()
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join(["---"] * len(header)) + "|"]
    rows = {
        "Nationality Correct": [],
        "Nationality Wrong, Region Correct": [],
        "Nationality Wrong, Region Wrong": [],
        "Region Accuracy (incl. Nationality Correct)": [],
    }
    for method in bundle.methods():
        entry = bundle.by_method(method)[0]
        lift = entry.report.region_lift
        if lift is None:
            raise MissingAnalysis(f"no region-lift analysis for {method!r}")
        frac = lift.fractions
        rows["Nationality Correct"].append(
            f"{lift.nationality_correct:,} ({frac[0]:.3f})")
        rows["Nationality Wrong, Region Correct"].append(
            f"{lift.region_only_correct:,} ({frac[1]:.3f})")
        rows["Nationality Wrong, Region Wrong"].append(
            f"{lift.both_wrong:,} ({frac[2]:.3f})")
        rows["Region Accuracy (incl. Nationality Correct)"].append(
            f"{lift.region_accuracy:.3f}")
    for label, cells in rows.items():
        lines.append("| " + " | ".join([label] + cells) + " |")
    return "\n".join(lines) + "\n"


def emit_plot_data(bundle: ReportBundle, kind: str, out_path: str | Path) -> Path:
    """Write one plot-ready CSV; returns the written path."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if kind == "strata_bars":
        text = _strata_csv(bundle)
    elif kind == "confusion_matrix":
        text = _confusion_csv(bundle)
    elif kind == "length_histogram":
        text = _length_histogram_csv(bundle)
    else:
        raise UnknownTableKind(f"no such plot kind: {kind!r} (know {PLOT_KINDS})")
    out_path.write_text(text, "utf-8")
    return out_path


def _strata_csv(bundle: ReportBundle) -> str:
    stats = aggregate_seeds(bundle)
    lines = ["method,bin,accuracy,macro_f1"]
    for method in bundle.methods():
        if "accuracy_Head" not in stats[method]:
            raise MissingAnalysis(f"no strata analysis in reports for {method!r}")
        for bin_name in _BIN_ORDER:
            acc = stats[method][f"accuracy_{bin_name}"][0]
            mf1 = stats[method][f"macro_f1_{bin_name}"][0]
            lines.append(f"{method},{bin_name},{acc},{mf1}")
    return "\n".join(lines) + "\n"


def _confusion_csv(bundle: ReportBundle, method: str | None = None) -> str:
    entry = None
    for candidate in bundle.entries:
        if method is not None and candidate.method != method:
            continue
        if candidate.report.confusion_matrix is not None:
            entry = candidate
            break
    if entry is None:
        raise MissingAnalysis("no confusion-matrix analysis in bundle")
    matrix = entry.report.confusion_matrix
    header = "true_label," + ",".join(matrix.columns)
    lines = [header]
    for true_label, row in zip(matrix.classes, matrix.rows):
        lines.append(true_label + "," + ",".join(repr(v) for v in row))
    return "\n".join(lines) + "\n"


def _length_histogram_csv(bundle: ReportBundle) -> str:
    histogram = bundle.provenance.get("length_histogram")
    if not histogram:
        raise MissingAnalysis("bundle provenance has no length_histogram")
    lines = ["length,count"]
    for length in sorted(histogram, key=int):
        lines.append(f"{length},{histogram[length]}")
    return "\n".join(lines) + "\n"
