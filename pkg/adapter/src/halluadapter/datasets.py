"""Dataset input for scoring and training.

One JSON object per line with `reference` and `target` strings, an optional
`id` (defaults to the line's ordinal, so ids are stable across runs), and an
optional `label` in {hallucinated, entailed, unlabeled} (defaults to
unlabeled, the right value for training data). Labeled benchmark splits are
converted to this shape once, outside the adapter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

VALID_LABELS = ("hallucinated", "entailed", "unlabeled")


@dataclass(frozen=True)
class Example:
    id: str
    reference: str
    target: str
    label: str = "unlabeled"


class DatasetError(Exception):
    pass


def load_examples(path: str) -> list[Example]:
    examples: list[Example] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{line_no}: bad JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise DatasetError(f"{path}:{line_no}: record must be an object")
            try:
                reference = obj["reference"]
                target = obj["target"]
            except KeyError as exc:
                raise DatasetError(
                    f"{path}:{line_no}: missing field {exc.args[0]!r}"
                ) from None
            if not isinstance(reference, str) or not isinstance(target, str):
                raise DatasetError(
                    f"{path}:{line_no}: reference and target must be strings"
                )
            rec_id = str(obj.get("id", f"ex-{line_no - 1:06d}"))
            if rec_id in seen:
                raise DatasetError(f"{path}:{line_no}: duplicate id {rec_id!r}")
            seen.add(rec_id)
            label = obj.get("label", "unlabeled")
            if label not in VALID_LABELS:
                raise DatasetError(
                    f"{path}:{line_no}: label must be one of {VALID_LABELS}"
                )
            examples.append(
                Example(id=rec_id, reference=reference, target=target, label=label)
            )
    return examples
