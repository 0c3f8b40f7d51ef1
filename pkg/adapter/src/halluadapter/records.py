"""Writer for the token-score record format the statistics engine ingests.

This mirrors the engine's documented line-delimited interchange (header line
with `header`/`scoring_mode`/`model`/`dataset`, then one flat JSON object per
example with `id`, `label`, `tokens` as [logp_gold, entropy] pairs, optional
string-to-string `meta`). The adapter owns only the producer side; it never
imports the engine.
"""

from __future__ import annotations

import json
from typing import IO, Mapping, Sequence

HEADER_TAG = "token-scores/v1"
LABELS = ("hallucinated", "entailed", "unlabeled")


def write_header(fh: IO[str], scoring_mode: str, model: str, dataset: str) -> None:
    fh.write(
        json.dumps(
            {
                "header": HEADER_TAG,
                "scoring_mode": scoring_mode,
                "model": model,
                "dataset": dataset,
            },
            ensure_ascii=False,
        )
        + "\n"
    )


def write_record(
    fh: IO[str],
    rec_id: str,
    label: str,
    token_scores: Sequence[tuple[float, float]],
    meta: Mapping[str, str] | None = None,
) -> None:
    if label not in LABELS:
        raise ValueError(f"label must be one of {LABELS}, got {label!r}")
    if not token_scores:
        raise ValueError(f"example {rec_id!r} has no scored tokens")
    obj: dict = {
        "id": rec_id,
        "label": label,
        "tokens": [[float(lp), float(ent)] for lp, ent in token_scores],
    }
    if meta:
        obj["meta"] = {str(k): str(v) for k, v in meta.items()}
    fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
