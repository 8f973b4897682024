"""JSON Lines prediction dumps.

One object per line: {"name", "true_label", "predicted": [...], "strategy",
"flags": {...}} with an optional "scores" list.  This is both the output of
the predict/llm commands and the import format for external model
predictions.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

from .errors import FormatError
from .evaluation import Prediction


def prediction_to_row(pred: Prediction, strategy: str = "", flags: dict | None = None) -> dict:
    row = {
        "name": pred.name,
        "true_label": pred.true_label,
        "predicted": list(pred.ranked),
        "strategy": strategy or pred.source,
        "flags": {"unknown": pred.unknown, **(flags or {})},
    }
    if pred.scores is not None:
        row["scores"] = list(pred.scores)
    return row


def write_dump(path: str | Path, rows: Iterable[dict]) -> int:
    """Write dump rows; returns the number of lines written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
            count += 1
    return count


def read_dump(path: str | Path) -> list[Prediction]:
    path = Path(path)
    predictions: list[Prediction] = []
    for i, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}", line=i) from exc
        try:
            predicted: Sequence[str] = row["predicted"]
            flags = row.get("flags", {})
            predictions.append(
                Prediction(
                    name=row["name"],
                    true_label=row["true_label"],
                    ranked=tuple(predicted),
                    scores=tuple(row["scores"]) if "scores" in row else None,
                    source=row.get("strategy", ""),
                    unknown=bool(flags.get("unknown", not predicted)),
                )
            )
        except KeyError as exc:
            raise FormatError(f"missing field {exc}", line=i) from exc
    return predictions
