"""Token-score record interchange: parsing, validation, and collections.

One record per line. Each record is a flat JSON object:

    {"id": "wow-dev-0007", "label": "hallucinated",
     "tokens": [[-0.105, 2.37], [-3.2, 0.91]],
     "meta": {"dataset": "wow", "split": "dev"}}

`tokens` is a non-empty array of [logp_gold, entropy] pairs: the natural-log
probability of the gold token (finite, <= 0) and the predictive entropy at
that position in nats (finite, >= 0). `meta` is an optional string-to-string
map; unknown meta keys are preserved. An optional first line, distinguished
by a `header` field, records which scoring mode produced the file:

    {"header": "token-scores/v1", "scoring_mode": "causal",
     "model": "gpt2", "dataset": "wow-dev"}

Validation is strict and total: every line yields either a valid point or a
structured error. Non-finite numbers are rejected rather than clamped, so
producer-side numerical bugs surface instead of silently corrupting the
downstream statistics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Iterator

from .errors import DuplicateIdError, ParseError, ValidationError

SCORING_MODES = ("causal", "masked", "encdec")
HEADER_TAG = "token-scores/v1"

_RECORD_KEYS = {"id", "label", "tokens", "meta"}
_HEADER_KEYS = {"header", "scoring_mode", "model", "dataset"}


class Label(str, Enum):
    HALLUCINATED = "hallucinated"
    ENTAILED = "entailed"
    UNLABELED = "unlabeled"


@dataclass(frozen=True)
class TokenScore:
    """Gold-token log probability and predictive entropy for one position."""

    logp_gold: float
    entropy: float

    def __post_init__(self):
        if not math.isfinite(self.logp_gold) or self.logp_gold > 0.0:
            raise ValidationError(
                f"logp_gold must be finite and <= 0, got {self.logp_gold!r}"
            )
        if not math.isfinite(self.entropy) or self.entropy < 0.0:
            raise ValidationError(
                f"entropy must be finite and >= 0, got {self.entropy!r}"
            )


@dataclass(frozen=True)
class ExamplePoint:
    """One (reference, target) pair: its token scores, label, and metadata."""

    id: str
    label: Label
    tokens: tuple[TokenScore, ...]
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.tokens:
            raise ValidationError(f"example {self.id!r}: tokens must be non-empty")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class FileHeader:
    scoring_mode: str
    model: str
    dataset: str

    def __post_init__(self):
        if self.scoring_mode not in SCORING_MODES:
            raise ValidationError(
                f"scoring_mode must be one of {SCORING_MODES}, got {self.scoring_mode!r}"
            )


@dataclass(frozen=True)
class ExampleCollection:
    """Immutable, order-preserving set of labeled points with unique ids."""

    points: tuple[ExamplePoint, ...]
    source: str = ""
    header: FileHeader | None = None

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[ExamplePoint]:
        return iter(self.points)

    def ids(self) -> list[str]:
        return [p.id for p in self.points]


def _require_number(value, what: str, line_no: int | None) -> float:
    # bool is an int subclass; a true/false token score is producer garbage
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{what} must be a number, got {value!r}", line_no)
    return float(value)


def parse_record(line: str, line_no: int | None = None) -> ExamplePoint:
    """Parse one record line into an ExamplePoint, checking every invariant.

    Raises ParseError for malformed syntax and ValidationError (naming the
    field, and the token index where applicable) for invariant violations.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid record syntax: {exc.msg}", line_no) from exc
    if not isinstance(obj, dict):
        raise ParseError("record must be a JSON object", line_no)

    unknown = set(obj) - _RECORD_KEYS
    if unknown:
        raise ValidationError(
            f"unknown record field(s): {', '.join(sorted(unknown))}", line_no
        )

    rec_id = obj.get("id")
    if not isinstance(rec_id, str) or not rec_id:
        raise ValidationError("id must be a non-empty string", line_no)

    raw_label = obj.get("label")
    try:
        label = Label(raw_label)
    except ValueError:
        raise ValidationError(
            f"label must be one of {[l.value for l in Label]}, got {raw_label!r}",
            line_no,
        ) from None

    raw_tokens = obj.get("tokens")
    if not isinstance(raw_tokens, list) or not raw_tokens:
        raise ValidationError("tokens must be a non-empty array", line_no)
    tokens = []
    for j, pair in enumerate(raw_tokens):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ValidationError(
                f"token {j}: expected a [logp_gold, entropy] pair", line_no
            )
        logp = _require_number(pair[0], f"token {j}: logp_gold", line_no)
        ent = _require_number(pair[1], f"token {j}: entropy", line_no)
        if not math.isfinite(logp) or logp > 0.0:
            raise ValidationError(
                f"token {j}: logp_gold must be finite and <= 0, got {pair[0]!r}",
                line_no,
            )
        if not math.isfinite(ent) or ent < 0.0:
            raise ValidationError(
                f"token {j}: entropy must be finite and >= 0, got {pair[1]!r}",
                line_no,
            )
        tokens.append(TokenScore(logp, ent))

    raw_meta = obj.get("meta")
    meta: dict[str, str] = {}
    if raw_meta is not None:
        if not isinstance(raw_meta, dict):
            raise ValidationError("meta must be a string-to-string map", line_no)
        for k, v in raw_meta.items():
            if not isinstance(k, str) or not isinstance(v, str):
                raise ValidationError(
                    f"meta entry {k!r} must map a string to a string", line_no
                )
            meta[k] = v

    return ExamplePoint(id=rec_id, label=label, tokens=tuple(tokens), meta=meta)


def parse_header(line: str, line_no: int | None = None) -> FileHeader:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid header syntax: {exc.msg}", line_no) from exc
    if not isinstance(obj, dict) or "header" not in obj:
        raise ParseError("not a header line", line_no)
    unknown = set(obj) - _HEADER_KEYS
    if unknown:
        raise ValidationError(
            f"unknown header field(s): {', '.join(sorted(unknown))}", line_no
        )
    for key in ("scoring_mode", "model", "dataset"):
        if not isinstance(obj.get(key), str) or not obj[key]:
            raise ValidationError(f"header {key} must be a non-empty string", line_no)
    mode = obj["scoring_mode"]
    if mode not in SCORING_MODES:
        raise ValidationError(
            f"header scoring_mode must be one of {SCORING_MODES}, got {mode!r}",
            line_no,
        )
    return FileHeader(scoring_mode=mode, model=obj["model"], dataset=obj["dataset"])


def serialize_record(p: ExamplePoint) -> str:
    """Inverse of parse_record; floats keep exact double round-trip digits."""
    obj: dict = {
        "id": p.id,
        "label": p.label.value,
        "tokens": [[t.logp_gold, t.entropy] for t in p.tokens],
    }
    if p.meta:
        obj["meta"] = dict(p.meta)
    return json.dumps(obj, ensure_ascii=False)


def serialize_header(h: FileHeader) -> str:
    return json.dumps(
        {
            "header": HEADER_TAG,
            "scoring_mode": h.scoring_mode,
            "model": h.model,
            "dataset": h.dataset,
        },
        ensure_ascii=False,
    )


def read_stream(
    lines: Iterable[str],
) -> tuple[FileHeader | None, Iterator[ExamplePoint]]:
    """Split a line stream into (optional header, record iterator).

    The iterator parses lazily (bounded memory per record) and detects
    duplicate ids across the whole stream, naming both occurrences.
    """
    it = iter(lines)
    first = None
    first_no = 0
    for first_no, raw in enumerate(it, start=1):
        if raw.strip():
            first = raw
            break
    header: FileHeader | None = None
    pending: tuple[str, int] | None = None
    if first is not None:
        if _looks_like_header(first):
            header = parse_header(first, first_no)
        else:
            pending = (first, first_no)

    def records() -> Iterator[ExamplePoint]:
        seen: dict[str, int] = {}

        def emit(raw_line: str, line_no: int) -> ExamplePoint:
            if _looks_like_header(raw_line):
                raise ParseError(
                    "header line allowed only as the first line", line_no
                )
            point = parse_record(raw_line, line_no)
            if point.id in seen:
                raise DuplicateIdError(
                    f"duplicate id {point.id!r}: first seen at line "
                    f"{seen[point.id]}, again at line {line_no}",
                    line_no,
                )
            seen[point.id] = line_no
            return point

        if pending is not None:
            yield emit(*pending)
        for line_no, raw_line in enumerate(it, start=first_no + 1):
            if not raw_line.strip():
                continue
            yield emit(raw_line, line_no)

    return header, records()


def _looks_like_header(line: str) -> bool:
    stripped = line.lstrip()
    if not stripped.startswith("{"):
        return False
    try:
        obj = json.loads(line)
    except json.JSONDecodeError:
        return False
    return isinstance(obj, dict) and "header" in obj


def load_collection(lines: Iterable[str], source: str = "") -> ExampleCollection:
    """Materialize a record stream, preserving input order."""
    header, records = read_stream(lines)
    return ExampleCollection(points=tuple(records), source=source, header=header)


def load_collection_file(path: str) -> ExampleCollection:
    with open(path, "r", encoding="utf-8") as fh:
        return load_collection(fh, source=path)


def dump_collection(c: ExampleCollection, fh: IO[str]) -> None:
    if c.header is not None:
        fh.write(serialize_header(c.header) + "\n")
    for p in c.points:
        fh.write(serialize_record(p) + "\n")


def split_by_label(
    c: ExampleCollection,
) -> tuple[ExampleCollection, ExampleCollection]:
    """Partition into (hallucinated, entailed), dropping unlabeled points.

    Order is preserved; every labeled point lands in exactly one output.
    Empty partitions are legal here; downstream statistics enforce their own
    minimum sizes.
    """
    hall = tuple(p for p in c.points if p.label is Label.HALLUCINATED)
    ent = tuple(p for p in c.points if p.label is Label.ENTAILED)
    return (
        ExampleCollection(points=hall, source=c.source, header=c.header),
        ExampleCollection(points=ent, source=c.source, header=c.header),
    )
