"""Corpus ingestion and preprocessing.

Reproduces the standard pipeline: drop labels with fewer than ``min_samples``
records, randomly cap each surviving label at ``cap`` records, and split
8:1:1 per label (train gets floor(0.8*n), dev floor(0.1*n), test the rest).
All randomness is drawn from the splitmix64 stream in :mod:`nameorigin.prng`,
so identical (input, seed) pairs produce byte-identical splits.
"""

from __future__ import annotations

import hashlib
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

from .errors import EmptyAfterFilter, FormatError
from .prng import SplitMix64, derive

MANIFEST_VERSION = 1


class NameRecord(NamedTuple):
    name: str
    nationality: str


@dataclass(frozen=True)
class PreprocessConfig:
    min_samples: int = 500
    cap: int = 800
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0

    def __post_init__(self):
        if self.min_samples < 1:
            raise FormatError("min_samples must be >= 1")
        if self.cap < self.min_samples:
            raise FormatError("cap must be >= min_samples")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise FormatError("ratios must sum to 1")


@dataclass
class SplitDataset:
    train: list[NameRecord]
    dev: list[NameRecord]
    test: list[NameRecord]
    seed: int
    config: PreprocessConfig

    @property
    def splits(self) -> dict[str, list[NameRecord]]:
        return {"train": self.train, "dev": self.dev, "test": self.test}

    def label_counts(self, split: str) -> dict[str, int]:
        counts: dict[str, int] = {}
        for rec in self.splits[split]:
            counts[rec.nationality] = counts.get(rec.nationality, 0) + 1
        return counts


@dataclass
class CorpusStats:
    total: int
    label_counts: dict[str, int]
    mean_length: float
    median_length: float
    length_histogram: dict[int, int] = field(default_factory=dict)


def load_raw(path: str | Path) -> list[NameRecord]:
    """Load a raw corpus file.

    Two formats are accepted: tab-separated ``name<TAB>nationality`` lines,
    and the JSON object form mapping each name to a list of nationalities
    (expanded to one record per listed nationality, in file order).
    Duplicate (name, nationality) pairs stay distinct records.
    """
    path = Path(path)
    text = path.read_text("utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return _load_json_corpus(text)
    records: list[NameRecord] = []
    for i, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"expected 2 tab-separated columns, got {len(parts)}", line=i)
        name, nationality = parts[0].strip(), parts[1].strip()
        if not name:
            raise FormatError("empty name field", line=i)
        if not nationality:
            raise FormatError("empty nationality field", line=i)
        records.append(NameRecord(name, nationality))
    return records


def _load_json_corpus(text: str) -> list[NameRecord]:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON corpus: {exc}") from exc
    if not isinstance(obj, dict):
        raise FormatError("JSON corpus must be an object mapping name -> [nationalities]")
    records: list[NameRecord] = []
    for name, nats in obj.items():
        name = name.strip()
        if not name:
            raise FormatError("empty name key in JSON corpus")
        if isinstance(nats, str):
            nats = [nats]
        if not isinstance(nats, list):
            raise FormatError(f"nationalities for {name!r} must be a list")
        for nat in nats:
            nat = str(nat).strip()
            if not nat:
                raise FormatError(f"empty nationality for {name!r}")
            records.append(NameRecord(name, nat))
    return records


def _take(n: int, ratio: float) -> int:
    # floor with a tiny epsilon so exact products survive binary rounding
    return int(n * ratio + 1e-9)


def preprocess(records: Iterable[NameRecord], config: PreprocessConfig) -> SplitDataset:
    """Filter, cap, and split a corpus; deterministic given (input order, seed)."""
    records = list(records)
    if not records:
        raise EmptyAfterFilter("no input records")

    by_label: dict[str, list[NameRecord]] = {}
    for rec in records:
        by_label.setdefault(rec.nationality, []).append(rec)
    surviving = sorted(lab for lab, recs in by_label.items() if len(recs) >= config.min_samples)
    if not surviving:
        raise EmptyAfterFilter(
            f"no label has >= {config.min_samples} records (max was "
            f"{max(len(r) for r in by_label.values())})"
        )

    train: list[NameRecord] = []
    dev: list[NameRecord] = []
    test: list[NameRecord] = []
    for label in surviving:
        recs = list(by_label[label])
        rng = SplitMix64(derive(config.seed, f"downsample/{label}"))
        rng.shuffle(recs)
        recs = recs[: config.cap]
        n = len(recs)
        n_train = _take(n, config.ratios[0])
        n_dev = _take(n, config.ratios[1])
        train.extend(recs[:n_train])
        dev.extend(recs[n_train : n_train + n_dev])
        test.extend(recs[n_train + n_dev :])

    for split_name, split in (("train", train), ("dev", dev), ("test", test)):
        SplitMix64(derive(config.seed, f"shuffle/{split_name}")).shuffle(split)
    return SplitDataset(train, dev, test, config.seed, config)


def corpus_stats(records: Iterable[NameRecord]) -> CorpusStats:
    """Per-label counts plus name-length distribution (characters incl. spaces)."""
    records = list(records)
    counts: dict[str, int] = {}
    lengths: list[int] = []
    for rec in records:
        counts[rec.nationality] = counts.get(rec.nationality, 0) + 1
        lengths.append(len(rec.name))
    histogram: dict[int, int] = {}
    for length in lengths:
        histogram[length] = histogram.get(length, 0) + 1
    mean = sum(lengths) / len(lengths) if lengths else 0.0
    median = float(statistics.median(lengths)) if lengths else 0.0
    return CorpusStats(
        total=len(records),
        label_counts=dict(sorted(counts.items())),
        mean_length=mean,
        median_length=median,
        length_histogram=dict(sorted(histogram.items())),
    )


def _write_tsv(path: Path, records: Iterable[NameRecord]) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(f"{rec.name}\t{rec.nationality}\n")


def save_splits(ds: SplitDataset, out_dir: str | Path) -> Path:
    """Write train/dev/test TSVs and a manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = hashlib.sha256()
    per_label: dict[str, dict[str, int]] = {}
    for split_name in ("train", "dev", "test"):
        path = out_dir / f"{split_name}.tsv"
        _write_tsv(path, ds.splits[split_name])
        digest.update(path.read_bytes())
        per_label[split_name] = dict(sorted(ds.label_counts(split_name).items()))

    stats = corpus_stats(ds.train + ds.dev + ds.test)
    manifest = {
        "version": MANIFEST_VERSION,
        "seed": ds.seed,
        "config": {
            "min_samples": ds.config.min_samples,
            "cap": ds.config.cap,
            "ratios": list(ds.config.ratios),
        },
        "totals": {name: len(split) for name, split in ds.splits.items()},
        "total": stats.total,
        "labels": sorted(per_label["train"]),
        "per_label_counts": per_label,
        "stats": {
            "mean_length": stats.mean_length,
            "median_length": stats.median_length,
            "length_histogram": {str(k): v for k, v in stats.length_histogram.items()},
        },
        "multi_nationality_rule": "json corpus entries expand to one record per listed nationality",
        "fingerprint": digest.hexdigest(),
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8")
    return manifest_path


def load_split(split_dir: str | Path, split: str) -> list[NameRecord]:
    path = Path(split_dir) / f"{split}.tsv"
    if not path.exists():
        raise FormatError(f"missing split file: {path}")
    return load_raw(path)


def load_manifest(split_dir: str | Path) -> dict:
    path = Path(split_dir) / "manifest.json"
    if not path.exists():
        raise FormatError(f"missing manifest: {path}")
    return json.loads(path.read_text("utf-8"))
