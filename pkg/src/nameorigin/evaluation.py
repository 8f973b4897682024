"""Metrics and error analyses over ranked prediction sets.

Everything here is a pure function over immutable predictions.  Top-1
scoring treats an Unknown (empty) prediction as wrong; for per-class F1 an
Unknown contributes a false negative to the true class and no false positive
anywhere, so the class count stays fixed.  Macro-F1 averages over the whole
declared label space, including classes absent from the sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import EmptySet, MissingLabel, NameSetMismatch
from .taxonomy import FrequencyBin, FrequencyBins, Granularity, TaxonomyMap

EVAL_REPORT_VERSION = 1


@dataclass(frozen=True)
class Prediction:
    name: str
    true_label: str
    ranked: tuple[str, ...]
    scores: tuple[float, ...] | None = None
    source: str = ""
    unknown: bool = False

    def top1(self) -> str | None:
        return self.ranked[0] if self.ranked else None

    def is_correct(self) -> bool:
        return bool(self.ranked) and self.ranked[0] == self.true_label


@dataclass(frozen=True)
class PerClassStats:
    label: str
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class BinMetrics:
    count: int
    accuracy: float
    macro_f1: float


@dataclass
class StrataReport:
    per_bin: dict[str, BinMetrics | None]
    delta_head_tail: float | None
    drop_pct: float | None


@dataclass
class RegionLift:
    n: int
    nationality_correct: int
    region_only_correct: int
    both_wrong: int

    @property
    def fractions(self) -> tuple[float, float, float]:
        return (
            self.nationality_correct / self.n,
            self.region_only_correct / self.n,
            self.both_wrong / self.n,
        )

    @property
    def region_accuracy(self) -> float:
        return (self.nationality_correct + self.region_only_correct) / self.n


@dataclass
class ConfusionPair:
    true_label: str
    predicted: str
    count: int
    same_region: bool


@dataclass
class ConfusionPairs:
    pairs: list[ConfusionPair]
    region_agreement: float | None


@dataclass
class ConfusionMatrixTop:
    classes: list[str]  # top-N true classes by support
    columns: list[str]  # classes + ["other"]
    rows: list[list[float]]  # row-normalised fractions, each sums to 1


@dataclass
class CrossModelCases:
    buckets: dict[str, list[tuple[Prediction, Prediction]]] = field(default_factory=dict)

    def sizes(self) -> dict[str, int]:
        return {key: len(val) for key, val in self.buckets.items()}


@dataclass
class EvalReport:
    source: str
    granularity: str
    mode: str  # "native" or "projected"
    n: int
    accuracy: float
    macro_f1: float
    precision_at: dict[int, float]
    unknown_rate: float
    per_class: list[PerClassStats]
    strata: StrataReport | None = None
    region_lift: RegionLift | None = None
    confusion_pairs: ConfusionPairs | None = None
    confusion_matrix: ConfusionMatrixTop | None = None

    def to_dict(self) -> dict:
        return {
            "version": EVAL_REPORT_VERSION,
            "source": self.source,
            "granularity": self.granularity,
            "mode": self.mode,
            "n": self.n,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "precision_at": {str(k): v for k, v in self.precision_at.items()},
            "unknown_rate": self.unknown_rate,
            "per_class": [
                {"label": s.label, "tp": s.tp, "fp": s.fp, "fn": s.fn,
                 "precision": s.precision, "recall": s.recall, "f1": s.f1}
                for s in self.per_class
            ],
            "strata": None if self.strata is None else {
                "per_bin": {
                    name: None if m is None else
                    {"count": m.count, "accuracy": m.accuracy, "macro_f1": m.macro_f1}
                    for name, m in self.strata.per_bin.items()
                },
                "delta_head_tail": self.strata.delta_head_tail,
                "drop_pct": self.strata.drop_pct,
            },
            "region_lift": None if self.region_lift is None else {
                "n": self.region_lift.n,
                "nationality_correct": self.region_lift.nationality_correct,
                "region_only_correct": self.region_lift.region_only_correct,
                "both_wrong": self.region_lift.both_wrong,
                "fractions": list(self.region_lift.fractions),
                "region_accuracy": self.region_lift.region_accuracy,
            },
            "confusion_pairs": None if self.confusion_pairs is None else {
                "pairs": [
                    {"true": p.true_label, "pred": p.predicted,
                     "count": p.count, "same_region": p.same_region}
                    for p in self.confusion_pairs.pairs
                ],
                "region_agreement": self.confusion_pairs.region_agreement,
            },
            "confusion_matrix": None if self.confusion_matrix is None else {
                "classes": self.confusion_matrix.classes,
                "columns": self.confusion_matrix.columns,
                "rows": self.confusion_matrix.rows,
            },
        }

    @classmethod
    def from_dict(cls, payload: Mapping) -> "EvalReport":
        strata = None
        if payload.get("strata") is not None:
            raw = payload["strata"]
            strata = StrataReport(
                per_bin={
                    name: None if m is None else BinMetrics(m["count"], m["accuracy"], m["macro_f1"])
                    for name, m in raw["per_bin"].items()
                },
                delta_head_tail=raw["delta_head_tail"],
                drop_pct=raw["drop_pct"],
            )
        lift = None
        if payload.get("region_lift") is not None:
            raw = payload["region_lift"]
            lift = RegionLift(raw["n"], raw["nationality_correct"],
                              raw["region_only_correct"], raw["both_wrong"])
        pairs = None
        if payload.get("confusion_pairs") is not None:
            raw = payload["confusion_pairs"]
            pairs = ConfusionPairs(
                pairs=[ConfusionPair(p["true"], p["pred"], p["count"], p["same_region"])
                       for p in raw["pairs"]],
                region_agreement=raw["region_agreement"],
            )
        matrix = None
        if payload.get("confusion_matrix") is not None:
            raw = payload["confusion_matrix"]
            matrix = ConfusionMatrixTop(raw["classes"], raw["columns"], raw["rows"])
        return cls(
            source=payload["source"],
            granularity=payload["granularity"],
            mode=payload["mode"],
            n=payload["n"],
            accuracy=payload["accuracy"],
            macro_f1=payload["macro_f1"],
            precision_at={int(k): v for k, v in payload["precision_at"].items()},
            unknown_rate=payload["unknown_rate"],
            per_class=[PerClassStats(s["label"], s["tp"], s["fp"], s["fn"])
                       for s in payload["per_class"]],
            strata=strata,
            region_lift=lift,
            confusion_pairs=pairs,
            confusion_matrix=matrix,
        )


def _require_nonempty(predictions: Sequence[Prediction]) -> None:
    if not predictions:
        raise EmptySet("no predictions to evaluate")


def accuracy(predictions: Sequence[Prediction]) -> float:
    _require_nonempty(predictions)
    return sum(p.is_correct() for p in predictions) / len(predictions)


def unknown_rate(predictions: Sequence[Prediction]) -> float:
    _require_nonempty(predictions)
    return sum(1 for p in predictions if p.unknown or not p.ranked) / len(predictions)


def per_class_stats(
    predictions: Sequence[Prediction], label_space: Sequence[str]
) -> list[PerClassStats]:
    _require_nonempty(predictions)
    space = list(label_space)
    known = set(space)
    tp = {lab: 0 for lab in space}
    fp = {lab: 0 for lab in space}
    fn = {lab: 0 for lab in space}
    for pred in predictions:
        top = pred.top1()
        if top is not None and top == pred.true_label:
            if top in known:
                tp[top] += 1
        else:
            if pred.true_label in known:
                fn[pred.true_label] += 1
            if top is not None and top in known:
                fp[top] += 1
    return [PerClassStats(lab, tp[lab], fp[lab], fn[lab]) for lab in space]


def macro_f1(predictions: Sequence[Prediction], label_space: Sequence[str]) -> float:
    stats = per_class_stats(predictions, label_space)
    if not stats:
        raise EmptySet("empty label space")
    return sum(s.f1 for s in stats) / len(stats)


def precision_at_k(predictions: Sequence[Prediction], k: int) -> float:
    _require_nonempty(predictions)
    if k < 1:
        raise EmptySet("k must be >= 1")
    hits = sum(1 for p in predictions if p.true_label in p.ranked[: min(k, len(p.ranked))])
    return hits / len(predictions)


def project_predictions(
    predictions: Sequence[Prediction], taxonomy: TaxonomyMap, level: Granularity
) -> list[Prediction]:
    """Coarsen nationality-level predictions; ranked lists dedupe in order."""
    projected = []
    for pred in predictions:
        seen: list[str] = []
        for lab in pred.ranked:
            coarse = taxonomy.project(lab, level)
            if coarse not in seen:
                seen.append(coarse)
        projected.append(
            Prediction(
                name=pred.name,
                true_label=taxonomy.project(pred.true_label, level),
                ranked=tuple(seen),
                scores=None,
                source=pred.source,
                unknown=pred.unknown,
            )
        )
    return projected


def strata_report(predictions: Sequence[Prediction], bins: FrequencyBins) -> StrataReport:
    _require_nonempty(predictions)
    uncovered = sorted({p.true_label for p in predictions} - set(bins.bin_of))
    if uncovered:
        raise MissingLabel(f"true labels missing from frequency bins: {uncovered}")
    per_bin: dict[str, BinMetrics | None] = {}
    acc: dict[FrequencyBin, float | None] = {}
    for which in FrequencyBin:
        subset = [p for p in predictions if bins.bin_of[p.true_label] is which]
        if not subset:
            per_bin[which.value] = None
            acc[which] = None
            continue
        bin_classes = bins.members(which)
        metrics = BinMetrics(
            count=len(subset),
            accuracy=accuracy(subset),
            macro_f1=macro_f1(subset, bin_classes),
        )
        per_bin[which.value] = metrics
        acc[which] = metrics.accuracy
    head, tail = acc[FrequencyBin.HEAD], acc[FrequencyBin.TAIL]
    delta = None if head is None or tail is None else head - tail
    if delta is None:
        drop = None
    else:
        drop = 0.0 if head == 0 else 100.0 * delta / head
    return StrataReport(per_bin=per_bin, delta_head_tail=delta, drop_pct=drop)


def region_lift(predictions: Sequence[Prediction], taxonomy: TaxonomyMap) -> RegionLift:
    _require_nonempty(predictions)
    n_correct = n_region = n_wrong = 0
    for pred in predictions:
        if pred.is_correct():
            n_correct += 1
            continue
        top = pred.top1()
        if top is not None and (
            taxonomy.project(top, Granularity.REGION)
            == taxonomy.project(pred.true_label, Granularity.REGION)
        ):
            n_region += 1
        else:
            n_wrong += 1
    return RegionLift(len(predictions), n_correct, n_region, n_wrong)


def confusion_pairs(
    predictions: Sequence[Prediction], taxonomy: TaxonomyMap, top_n: int = 10
) -> ConfusionPairs:
    _require_nonempty(predictions)
    counts: dict[tuple[str, str], int] = {}
    for pred in predictions:
        top = pred.top1()
        if top is None or top == pred.true_label:
            continue
        counts[(pred.true_label, top)] = counts.get((pred.true_label, top), 0) + 1
    ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0][0], item[0][1]))
    pairs = [
        ConfusionPair(
            true_label=true,
            predicted=pred,
            count=count,
            same_region=(
                taxonomy.project(true, Granularity.REGION)
                == taxonomy.project(pred, Granularity.REGION)
            ),
        )
        for (true, pred), count in ordered[:top_n]
    ]
    rate = sum(p.same_region for p in pairs) / len(pairs) if pairs else None
    return ConfusionPairs(pairs=pairs, region_agreement=rate)


def confusion_matrix_top(
    predictions: Sequence[Prediction], top_n: int = 15
) -> ConfusionMatrixTop:
    """Row-normalised confusion rows for the top-N true classes by support.

    Columns are those same classes plus a trailing "other" bucket absorbing
    every remaining prediction (including Unknown), so each row sums to 1.
    """
    _require_nonempty(predictions)
    support: dict[str, int] = {}
    for pred in predictions:
        support[pred.true_label] = support.get(pred.true_label, 0) + 1
    classes = sorted(support, key=lambda lab: (-support[lab], lab))[:top_n]
    col_index = {lab: i for i, lab in enumerate(classes)}
    rows = []
    for true in classes:
        counts = [0] * (len(classes) + 1)
        total = 0
        for pred in predictions:
            if pred.true_label != true:
                continue
            total += 1
            top = pred.top1()
            counts[col_index.get(top, len(classes))] += 1
        rows.append([c / total for c in counts])
    return ConfusionMatrixTop(classes=classes, columns=classes + ["other"], rows=rows)


_CASE_BUCKETS = (
    "both_correct",
    "a_correct_b_wrong",
    "a_wrong_b_correct",
    "both_wrong_a_region_correct",
    "both_wrong_a_region_wrong",
)


def cross_model_cases(
    pred_a: Sequence[Prediction], pred_b: Sequence[Prediction], taxonomy: TaxonomyMap
) -> CrossModelCases:
    """Categorise paired predictions from two sources over identical names."""
    key = lambda p: (p.name, p.true_label)
    sorted_a = sorted(pred_a, key=key)
    sorted_b = sorted(pred_b, key=key)
    if [key(p) for p in sorted_a] != [key(p) for p in sorted_b]:
        raise NameSetMismatch("prediction sets do not cover identical (name, label) pairs")
    cases = CrossModelCases(buckets={name: [] for name in _CASE_BUCKETS})
    for a, b in zip(sorted_a, sorted_b):
        if a.is_correct() and b.is_correct():
            bucket = "both_correct"
        elif a.is_correct():
            bucket = "a_correct_b_wrong"
        elif b.is_correct():
            bucket = "a_wrong_b_correct"
        else:
            top = a.top1()
            region_ok = top is not None and (
                taxonomy.project(top, Granularity.REGION)
                == taxonomy.project(a.true_label, Granularity.REGION)
            )
            bucket = "both_wrong_a_region_correct" if region_ok else "both_wrong_a_region_wrong"
        cases.buckets[bucket].append((a, b))
    return cases


def build_report(
    predictions: Sequence[Prediction],
    taxonomy: TaxonomyMap,
    bins: FrequencyBins | None = None,
    ks: Sequence[int] = (1, 2, 3, 5),
    *,
    granularity: Granularity = Granularity.NATIONALITY,
    source: str = "",
    mode: str = "native",
    label_space: Sequence[str] | None = None,
    confusion_top_n: int = 10,
    matrix_top_n: int = 15,
) -> EvalReport:
    """Assemble the full metric suite for one prediction source.

    Region-level analyses (strata, region lift, confusion) only apply to
    nationality-granularity prediction sets.
    """
    _require_nonempty(predictions)
    space = list(label_space) if label_space is not None else list(
        taxonomy.label_space(granularity).labels
    )
    fine = granularity is Granularity.NATIONALITY
    report = EvalReport(
        source=source or (predictions[0].source if predictions else ""),
        granularity=granularity.value,
        mode=mode,
        n=len(predictions),
        accuracy=accuracy(predictions),
        macro_f1=macro_f1(predictions, space),
        precision_at={k: precision_at_k(predictions, k) for k in ks},
        unknown_rate=unknown_rate(predictions),
        per_class=per_class_stats(predictions, space),
        strata=strata_report(predictions, bins) if fine and bins is not None else None,
        region_lift=region_lift(predictions, taxonomy) if fine else None,
        confusion_pairs=confusion_pairs(predictions, taxonomy, confusion_top_n) if fine else None,
        confusion_matrix=confusion_matrix_top(predictions, matrix_top_n) if fine else None,
    )
    return report
