"""Reader for the engine's weight-file format.

Line-delimited records {id, weight, mode, reference_model} closed by a footer
{footer, count, weight_sum}. The footer's weight sum is the integrity
checksum: the recomputed sum must match it, and must equal the record count
(the softmax-times-N normalization guarantees that) within 1e-9 * N.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

SUM_RTOL = 1e-9


class WeightFileError(Exception):
    pass


@dataclass(frozen=True)
class WeightFile:
    weights: dict[str, float]
    mode: str
    reference_model: str

    def __len__(self) -> int:
        return len(self.weights)


def read_weight_file(lines) -> WeightFile:
    weights: dict[str, float] = {}
    mode: str | None = None
    reference = "unknown"
    footer: dict | None = None
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if footer is not None:
            raise WeightFileError(f"line {line_no}: records after the footer")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise WeightFileError(f"line {line_no}: bad JSON: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise WeightFileError(f"line {line_no}: record must be an object")
        if "footer" in obj:
            footer = obj
            continue
        try:
            rec_id = str(obj["id"])
            weight = float(obj["weight"])
            rec_mode = str(obj["mode"])
        except (KeyError, TypeError, ValueError) as exc:
            raise WeightFileError(f"line {line_no}: bad weight record: {exc}") from exc
        if weight <= 0.0 or not math.isfinite(weight):
            raise WeightFileError(f"line {line_no}: weight must be finite and > 0")
        if rec_id in weights:
            raise WeightFileError(f"line {line_no}: duplicate id {rec_id!r}")
        if mode is None:
            mode = rec_mode
        elif rec_mode != mode:
            raise WeightFileError(f"line {line_no}: mixed modes in one file")
        reference = str(obj.get("reference_model", reference))
        weights[rec_id] = weight
    if footer is None:
        raise WeightFileError("weight file has no footer record")
    if not weights:
        raise WeightFileError("weight file has no weight records")
    n = len(weights)
    if footer.get("count") != n:
        raise WeightFileError(
            f"footer count {footer.get('count')!r} does not match {n} records"
        )
    total = math.fsum(weights.values())
    declared = footer.get("weight_sum")
    if not isinstance(declared, (int, float)) or abs(total - declared) > SUM_RTOL * n:
        raise WeightFileError(
            f"checksum mismatch: records sum to {total!r}, footer says {declared!r}"
        )
    if abs(total - n) > SUM_RTOL * n:
        raise WeightFileError(f"weights sum to {total!r}, expected the count {n}")
    return WeightFile(weights=weights, mode=mode, reference_model=reference)
