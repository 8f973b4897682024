"""Strict parsing of model responses into canonical label lists."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class ParseResult:
    labels: tuple[str, ...]
    parse_error: bool


def canonical_lookup(label_space: Iterable[str]) -> dict[str, str]:
    """Case-insensitive lookup table from folded form to canonical label."""
    return {lab.strip().casefold(): lab.strip() for lab in label_space}


def last_string_array(text: str) -> list[str] | None:
    """The last well-formed JSON array of strings embedded in ``text``."""
    decoder = json.JSONDecoder()
    result = None
    pos = text.find("[")
    while pos != -1:
        try:
            obj, _ = decoder.raw_decode(text, pos)
        except (json.JSONDecodeError, ValueError):
            obj = None
        if isinstance(obj, list) and all(isinstance(el, str) for el in obj):
            result = obj
        pos = text.find("[", pos + 1)
    return result


def parse_response(text: str, label_space: Sequence[str], limit: int = 5) -> ParseResult:
    """Extract at most ``limit`` distinct canonical labels from a response.

    Takes the last well-formed JSON array of strings; each entry is trimmed
    and matched case-insensitively against the label space.  Non-matches are
    dropped; duplicates keep their first occurrence.  parse_error is set only
    when no string array exists at all.
    """
    array = last_string_array(text)
    if array is None:
        return ParseResult((), True)
    lookup = canonical_lookup(label_space)
    out: list[str] = []
    for entry in array:
        canonical = lookup.get(entry.strip().casefold())
        if canonical is not None and canonical not in out:
            out.append(canonical)
        if len(out) == limit:
            break
    return ParseResult(tuple(out), False)
