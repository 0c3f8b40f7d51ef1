"""Score a dataset with a checkpoint and emit a token-score record file."""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import IO, Sequence

from .datasets import Example
from .records import write_header, write_record
from .scoring import EmptyTargetError, Scorer, ScoringError


@dataclass(frozen=True)
class DumpStats:
    written: int
    skipped: int


def dump_dataset(
    scorer: Scorer,
    examples: Sequence[Example],
    out: IO[str],
    model_name: str,
    dataset_name: str,
    log: IO[str] | None = None,
) -> DumpStats:
    """Header plus one record per example, in input order.

    Zero-token targets are skipped with a warning line on `log` (stderr by
    default); every other scoring failure aborts with the example id attached
    so holes never pass silently.
    """
    log = log if log is not None else sys.stderr
    write_header(out, scorer.mode.value, model_name, dataset_name)
    written = 0
    skipped = 0
    for example in examples:
        try:
            token_scores = scorer.score_example(example.reference, example.target)
        except EmptyTargetError:
            print(
                f"halluadapter: warning: skipping {example.id}: target has no tokens",
                file=log,
            )
            skipped += 1
            continue
        except ScoringError as exc:
            raise ScoringError(f"example {example.id}: {exc}") from exc
        write_record(out, example.id, example.label, token_scores)
        written += 1
    return DumpStats(written=written, skipped=skipped)
