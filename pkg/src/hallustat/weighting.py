"""Per-example loss weights from a reference model's metric values.

The reweighting recipe: take each training example's metric under a frozen
reference model, negate it in entropy mode (high uncertainty gets pushed
down, high log probability gets pulled up), softmax the whole vector, and
scale by N so the total loss keeps the unweighted scale. Identical metrics
therefore reproduce the unweighted regime exactly (all weights 1.0).

The weight file is line-delimited: one record per example plus a footer
carrying the entry count and the weight sum, which doubles as an integrity
checksum for consumers:

    {"id": "tr-0001", "weight": 1.0317, "mode": "entropy", "reference_model": "gpt2"}
    ...
    {"footer": "weights/v1", "count": 2, "weight_sum": 2.0}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .errors import ParseError, PreconditionError, ValidationError
from .ingest import ExampleCollection
from .metrics import MetricKind, metric_value

FOOTER_TAG = "weights/v1"
SUM_RTOL = 1e-9


@dataclass(frozen=True)
class WeightVector:
    """Id-aligned positive weights summing to the number of entries."""

    entries: tuple[tuple[str, float], ...]
    mode: MetricKind
    reference_model: str = "unknown"

    def __post_init__(self):
        n = len(self.entries)
        if n == 0:
            raise PreconditionError("a weight vector needs at least one entry")
        total = math.fsum(w for _, w in self.entries)
        if any(w <= 0.0 for _, w in self.entries):
            raise ValidationError("all weights must be > 0")
        if abs(total - n) > SUM_RTOL * n:
            raise ValidationError(
                f"weights must sum to the entry count: got {total!r} for n={n}"
            )

    def __len__(self) -> int:
        return len(self.entries)

    def ids(self) -> list[str]:
        return [i for i, _ in self.entries]

    def weights(self) -> list[float]:
        return [w for _, w in self.entries]

    def as_map(self) -> dict[str, float]:
        return dict(self.entries)


def raw_weight(value: float, mode: MetricKind) -> float:
    """Pre-softmax weight: the metric itself in logprob mode, its negation
    in entropy mode."""
    if not math.isfinite(value):
        raise ValidationError(f"metric value must be finite, got {value!r}")
    return -value if mode is MetricKind.ENTROPY else value


def normalize_weights(
    raw: Sequence[float] | np.ndarray, temperature: float = 1.0
) -> np.ndarray:
    """N * softmax(raw / temperature), computed with max-subtraction.

    At the default temperature 1.0 this is exactly the paper-faithful
    normalization (no scaling is applied to the raw values at all); other
    temperatures are an extension for users who want to soften the
    concentration softmax produces over thousands of examples. Weights are
    positive and sum to N within 1e-9 * N. A weight can underflow to zero
    only when the raw spread exceeds ~745 nats, far beyond what bounded
    metric values (|logprob| <= ln vocab, entropy <= ln vocab) can produce.
    """
    arr = np.asarray(raw, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise PreconditionError("raw weights must form a non-empty 1-d vector")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("raw weights must all be finite")
    if not (math.isfinite(temperature) and temperature > 0.0):
        raise ValidationError(f"temperature must be > 0, got {temperature!r}")
    if temperature != 1.0:
        arr = arr / temperature
    shifted = np.exp(arr - arr.max())
    # fsum is exactly rounded and therefore order-independent, which makes
    # permutation equivariance bitwise; multiplying by N before dividing
    # makes a uniform input yield exactly 1.0
    total = math.fsum(shifted)
    return (arr.size * shifted) / total


def compute_weights(
    c: ExampleCollection,
    mode: MetricKind,
    temperature: float = 1.0,
) -> WeightVector:
    """Weight every example in the collection, in collection order.

    The collection's token scores must come from the frozen pre-trained
    reference model, not the model being trained; labels are ignored, so
    unlabeled training data is fine.
    """
    if len(c) == 0:
        raise PreconditionError("cannot weight an empty collection")
    raw = [raw_weight(metric_value(p, mode), mode) for p in c]
    weights = normalize_weights(raw, temperature=temperature)
    reference = c.header.model if c.header is not None else "unknown"
    return WeightVector(
        entries=tuple((p.id, float(w)) for p, w in zip(c.points, weights)),
        mode=mode,
        reference_model=reference,
    )


def write_weight_file(wv: WeightVector, fh: IO[str]) -> None:
    for rec_id, w in wv.entries:
        fh.write(
            json.dumps(
                {
                    "id": rec_id,
                    "weight": w,
                    "mode": wv.mode.value,
                    "reference_model": wv.reference_model,
                },
                ensure_ascii=False,
            )
            + "\n"
        )
    total = math.fsum(w for _, w in wv.entries)
    fh.write(
        json.dumps({"footer": FOOTER_TAG, "count": len(wv), "weight_sum": total})
        + "\n"
    )


def read_weight_file(lines) -> WeightVector:
    """Parse and verify a weight file, including its footer checksum."""
    entries: list[tuple[str, float]] = []
    mode: MetricKind | None = None
    reference = "unknown"
    footer: dict | None = None
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if footer is not None:
            raise ParseError("records found after the footer", line_no)
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid weight record: {exc.msg}", line_no) from exc
        if not isinstance(obj, dict):
            raise ParseError("weight record must be a JSON object", line_no)
        if "footer" in obj:
            footer = obj
            continue
        try:
            rec_id = obj["id"]
            weight = float(obj["weight"])
            rec_mode = MetricKind(obj["mode"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ValidationError(f"bad weight record: {exc}", line_no) from exc
        if mode is None:
            mode = rec_mode
        elif rec_mode is not mode:
            raise ValidationError("mixed metric modes in one weight file", line_no)
        reference = str(obj.get("reference_model", reference))
        entries.append((rec_id, weight))
    if footer is None:
        raise ValidationError("weight file is missing its footer record")
    if mode is None:
        raise ValidationError("weight file contains no weight records")
    if footer.get("count") != len(entries):
        raise ValidationError(
            f"footer count {footer.get('count')!r} != {len(entries)} records"
        )
    total = math.fsum(w for _, w in entries)
    declared = footer.get("weight_sum")
    if not isinstance(declared, (int, float)) or abs(total - declared) > SUM_RTOL * max(
        len(entries), 1
    ):
        raise ValidationError(
            f"weight checksum mismatch: records sum to {total!r}, footer says {declared!r}"
        )
    return WeightVector(
        entries=tuple(entries), mode=mode, reference_model=reference
    )
