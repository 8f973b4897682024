"""Label space and hierarchy: 99 nationalities -> 14 regions -> 6 continents.

The curated mapping ships as ``data/taxonomy.tsv`` (tab-separated
``nationality<TAB>region<TAB>continent``, 99 lines, no header).  Region
membership counts are validated against the reference distribution in
``REGION_NATIONALITY_COUNTS``; ``validate_taxonomy`` gates startup.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import FormatError, MissingLabel, UnknownLabel


class Granularity(enum.Enum):
    NATIONALITY = "nationality"
    REGION = "region"
    CONTINENT = "continent"


class FrequencyBin(enum.Enum):
    HEAD = "Head"
    MID = "Mid"
    TAIL = "Tail"


# Reference per-region nationality counts for the 99-label space.
REGION_NATIONALITY_COUNTS: dict[str, int] = {
    "Eastern Europe": 15,
    "Africa": 15,
    "Western Europe": 11,
    "South America": 10,
    "Middle East": 10,
    "Southeast Asia": 7,
    "South Asia": 6,
    "Central America & Caribbean": 7,
    "Southern Europe": 5,
    "East Asia": 5,
    "North America": 3,
    "Caucasus & Central Asia": 2,
    "Oceania": 2,
    "Northern Europe": 1,
}

# Reference per-region training-sample totals for the standard corpus
# (500-minimum filter, 800 cap, 8:1:1 split).  Used by the acceptance
# suite when the raw corpus is available.
REGION_TRAIN_SAMPLES: dict[str, int] = {
    "Eastern Europe": 9600,
    "Africa": 8598,
    "Western Europe": 7040,
    "South America": 6285,
    "Middle East": 5837,
    "Southeast Asia": 4480,
    "South Asia": 3801,
    "Central America & Caribbean": 3625,
    "Southern Europe": 3091,
    "East Asia": 2964,
    "North America": 1920,
    "Caucasus & Central Asia": 1280,
    "Oceania": 1116,
    "Northern Europe": 640,
}

# Continent membership of the 14 regions.
REGION_TO_CONTINENT: dict[str, str] = {
    "East Asia": "Asia",
    "Southeast Asia": "Asia",
    "South Asia": "Asia",
    "Caucasus & Central Asia": "Asia",
    "Western Europe": "Europe",
    "Northern Europe": "Europe",
    "Southern Europe": "Europe",
    "Eastern Europe": "Europe",
    "North America": "Americas",
    "Central America & Caribbean": "Americas",
    "South America": "Americas",
    "Middle East": "Middle East",
    "Africa": "Africa",
    "Oceania": "Oceania",
}

EXPECTED_SPACE_SIZES = {
    Granularity.NATIONALITY: 99,
    Granularity.REGION: 14,
    Granularity.CONTINENT: 6,
}


def canonicalize(label: str) -> str:
    """Trim surrounding whitespace; comparison is case-sensitive afterwards."""
    return label.strip()


@dataclass(frozen=True)
class LabelSpace:
    """Ordered, unique, canonical labels at one granularity."""

    labels: tuple[str, ...]
    granularity: Granularity

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise FormatError("label space contains duplicates")
        if any(not lab or lab != canonicalize(lab) for lab in self.labels):
            raise FormatError("label space contains empty or non-canonical labels")

    def __contains__(self, label: str) -> bool:
        return label in set(self.labels)

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class TaxonomyMap:
    """Total maps nationality->region and region->continent."""

    nat_to_region: Mapping[str, str]
    region_to_continent: Mapping[str, str]

    def label_space(self, granularity: Granularity) -> LabelSpace:
        if granularity is Granularity.NATIONALITY:
            labels = sorted(self.nat_to_region)
        elif granularity is Granularity.REGION:
            labels = sorted(set(self.nat_to_region.values()))
        else:
            labels = sorted(set(self.region_to_continent.values()))
        return LabelSpace(tuple(labels), granularity)

    def project(self, label: str, level: Granularity) -> str:
        """Map a nationality label to its region or continent."""
        label = canonicalize(label)
        if label not in self.nat_to_region:
            raise UnknownLabel(f"not a known nationality: {label!r}")
        if level is Granularity.NATIONALITY:
            return label
        region = self.nat_to_region[label]
        if level is Granularity.REGION:
            return region
        return self.region_to_continent[region]

    def region_nationalities(self, region: str) -> list[str]:
        return sorted(n for n, r in self.nat_to_region.items() if r == region)

    def continent_regions(self, continent: str) -> list[str]:
        return sorted(r for r, c in self.region_to_continent.items() if c == continent)


@dataclass(frozen=True)
class FrequencyBins:
    """Head/Mid/Tail partition of the nationality space by training count."""

    bin_of: Mapping[str, FrequencyBin]

    def members(self, which: FrequencyBin) -> list[str]:
        return sorted(lab for lab, b in self.bin_of.items() if b is which)


@dataclass
class ValidationReport:
    ok: bool
    region_deltas: dict[str, int] = field(default_factory=dict)
    unmapped: list[str] = field(default_factory=list)
    problems: list[str] = field(default_factory=list)


def load_taxonomy(path: str | Path | None = None) -> TaxonomyMap:
    """Load a taxonomy TSV; defaults to the curated packaged file."""
    if path is None:
        text = resources.files("nameorigin.data").joinpath("taxonomy.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    nat_to_region: dict[str, str] = {}
    region_to_continent: dict[str, str] = {}
    for i, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"expected 3 tab-separated columns, got {len(parts)}", line=i)
        nat, region, continent = (canonicalize(p) for p in parts)
        if not nat or not region or not continent:
            raise FormatError("empty field in taxonomy row", line=i)
        if nat in nat_to_region:
            raise FormatError(f"duplicate nationality {nat!r}", line=i)
        nat_to_region[nat] = region
        if region in region_to_continent and region_to_continent[region] != continent:
            raise FormatError(f"region {region!r} mapped to two continents", line=i)
        region_to_continent[region] = continent
    return TaxonomyMap(nat_to_region, region_to_continent)


def validate_taxonomy(
    tax: TaxonomyMap, expected_labels: Iterable[str] | None = None
) -> ValidationReport:
    """Check a taxonomy against the reference region counts and structure.

    Report-valued: never raises.  ``expected_labels`` (default: the reference
    99-label space of the shipped file) determines which nationalities must be
    mapped.
    """
    report = ValidationReport(ok=True)
    if expected_labels is None:
        expected_labels = load_taxonomy().nat_to_region.keys()
    expected = [canonicalize(lab) for lab in expected_labels]

    report.unmapped = sorted(lab for lab in expected if lab not in tax.nat_to_region)
    if report.unmapped:
        report.problems.append(f"{len(report.unmapped)} nationalities unmapped")

    counts: dict[str, int] = {region: 0 for region in REGION_NATIONALITY_COUNTS}
    for nat, region in tax.nat_to_region.items():
        if region not in counts:
            report.problems.append(f"unknown region {region!r} (via {nat!r})")
            report.ok = False
            continue
        counts[region] += 1
    report.region_deltas = {
        region: counts[region] - want for region, want in REGION_NATIONALITY_COUNTS.items()
    }
    if any(delta != 0 for delta in report.region_deltas.values()):
        report.problems.append("per-region nationality counts deviate from reference")

    for region, continent in tax.region_to_continent.items():
        want = REGION_TO_CONTINENT.get(region)
        if want is None or continent != want:
            report.problems.append(f"region {region!r} maps to {continent!r}, expected {want!r}")

    if report.problems:
        report.ok = False
    return report


def assign_frequency_bins(train_counts: Mapping[str, int]) -> FrequencyBins:
    """Partition nationalities into Head/Mid/Tail thirds by training count.

    Sort key is (count descending, label ascending); the top third is Head.
    Requires a count >= 1 for every label in the space being binned.
    """
    labels = sorted(train_counts, key=lambda lab: (-train_counts[lab], lab))
    if not labels:
        raise MissingLabel("no labels to bin")
    if any(train_counts[lab] < 1 for lab in labels):
        bad = [lab for lab in labels if train_counts[lab] < 1]
        raise MissingLabel(f"labels with count < 1: {bad}")
    n = len(labels)
    third = n // 3
    if n % 3 != 0:
        # Non-multiple-of-3 spaces (tests, subsets): first third rounds down.
        third = max(1, third)
    bin_of: dict[str, FrequencyBin] = {}
    for rank, lab in enumerate(labels):
        if rank < third:
            bin_of[lab] = FrequencyBin.HEAD
        elif rank < 2 * third:
            bin_of[lab] = FrequencyBin.MID
        else:
            bin_of[lab] = FrequencyBin.TAIL
    return FrequencyBins(bin_of)


def bins_for_space(train_counts: Mapping[str, int], space: LabelSpace) -> FrequencyBins:
    """assign_frequency_bins restricted to ``space``; MissingLabel if uncovered."""
    missing = [lab for lab in space.labels if lab not in train_counts]
    if missing:
        raise MissingLabel(f"no training count for: {missing}")
    return assign_frequency_bins({lab: train_counts[lab] for lab in space.labels})
