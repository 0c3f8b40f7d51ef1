"""Token scoring for causal, masked, and encoder-decoder checkpoints.

Every scored position yields (logp_gold, entropy): the log-softmax value of
the gold token and the full-vocabulary predictive entropy, both accumulated
in double precision. Target tokens are tokenized without special tokens, so
BOS/EOS/CLS/SEP never count as scored positions.

Scoring modes:
  causal  - one forward over [context + target]; position j is predicted from
            the logits one step before it.
  masked  - one forward per target position, with that position replaced by
            the mask token.
  encdec  - context through the encoder, teacher-forced target through the
            decoder.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import torch


class ScoringMode(str, Enum):
    CAUSAL = "causal"
    MASKED = "masked"
    ENCDEC = "encdec"


class ScoringError(Exception):
    pass


class ModeMismatchError(ScoringError):
    """The model's architecture cannot serve the requested scoring mode."""


class EmptyTargetError(ScoringError):
    """The target text tokenized to zero tokens; the example is skippable."""


def scores_from_logits(logits_row: torch.Tensor, gold_id: int) -> tuple[float, float]:
    """(logp_gold, entropy) for one position, from its raw logits.

    log-softmax keeps every value <= 0 by construction; entropy terms with
    p == 0 are dropped rather than producing 0 * -inf.
    """
    log_probs = torch.log_softmax(logits_row.to(torch.float64), dim=-1)
    probs = log_probs.exp()
    terms = torch.where(probs > 0, probs * log_probs, torch.zeros_like(probs))
    logp_gold = float(log_probs[gold_id])
    entropy = float(-terms.sum())
    # adding +0.0 turns a negative zero into plain 0.0 for serialization
    return logp_gold + 0.0, entropy + 0.0


@dataclass
class Scorer:
    """Bundles a model, tokenizer, scoring mode, and conditioning template.

    `template` turns the reference text into the conditioning string (it must
    contain `{reference}`); the target is appended by tokenization, never by
    string concatenation, so the token boundary stays stable. `forward_rows`
    counts scored forward rows: in masked mode it grows by exactly one per
    target position.
    """

    model: object
    tokenizer: object
    mode: ScoringMode
    template: str = "{reference} "
    device: str = "cpu"
    max_length: int | None = None
    batch_size: int = 16
    forward_rows: int = field(default=0, init=False)

    def __post_init__(self):
        self.mode = ScoringMode(self.mode)
        config = self.model.config
        is_encdec = bool(getattr(config, "is_encoder_decoder", False))
        if self.mode is ScoringMode.ENCDEC and not is_encdec:
            raise ModeMismatchError("encdec mode needs an encoder-decoder model")
        if self.mode in (ScoringMode.CAUSAL, ScoringMode.MASKED) and is_encdec:
            raise ModeMismatchError(
                f"{self.mode.value} mode cannot run on an encoder-decoder model"
            )
        if self.mode is ScoringMode.MASKED and self.tokenizer.mask_token_id is None:
            raise ModeMismatchError("masked mode needs a tokenizer with a mask token")
        if "{reference}" not in self.template:
            raise ScoringError("template must contain the {reference} placeholder")
        self.model.eval()
        self.model.to(self.device)

    # -- tokenization -----------------------------------------------------

    def _context_ids(self, reference: str) -> list[int]:
        text = self.template.format(reference=reference)
        ids = self.tokenizer(text, add_special_tokens=False)["input_ids"]
        if not ids:
            bos = self.tokenizer.bos_token_id
            if bos is None:
                raise ScoringError("reference tokenized to zero tokens and the "
                                   "tokenizer has no BOS to stand in")
            ids = [bos]
        return list(ids)

    def _target_ids(self, target: str) -> list[int]:
        ids = self.tokenizer(target, add_special_tokens=False)["input_ids"]
        return list(ids)

    def _budget(self) -> int:
        if self.max_length is not None:
            return self.max_length
        for attr in ("max_position_embeddings", "n_positions"):
            value = getattr(self.model.config, attr, None)
            if isinstance(value, int) and value > 0:
                return value
        return 1024

    # -- scoring ----------------------------------------------------------

    @torch.no_grad()
    def score_example(self, reference: str, target: str) -> list[tuple[float, float]]:
        """One (logp_gold, entropy) pair per target token.

        Raises EmptyTargetError when the target tokenizes to nothing (the
        caller decides whether to skip) and ScoringError when the example
        cannot fit the model's position budget even with a truncated context.
        """
        y_ids = self._target_ids(target)
        if not y_ids:
            raise EmptyTargetError("target tokenized to zero tokens")
        if self.mode is ScoringMode.CAUSAL:
            return self._score_causal(self._context_ids(reference), y_ids)
        if self.mode is ScoringMode.MASKED:
            return self._score_masked(self._context_ids(reference), y_ids)
        return self._score_encdec(reference, y_ids)

    def _fit_context(self, x_ids: list[int], n_target: int, reserve: int) -> list[int]:
        budget = self._budget() - n_target - reserve
        if budget < 1:
            raise ScoringError(
                f"target of {n_target} tokens exceeds the model's "
                f"{self._budget()}-token budget"
            )
        # keep the most recent context when the reference is too long
        return x_ids[-budget:] if len(x_ids) > budget else x_ids

    def _score_causal(self, x_ids, y_ids):
        x_ids = self._fit_context(x_ids, len(y_ids), reserve=0)
        ids = torch.tensor([x_ids + y_ids], dtype=torch.long, device=self.device)
        logits = self.model(input_ids=ids).logits[0]
        self.forward_rows += 1
        offset = len(x_ids)
        return [
            scores_from_logits(logits[offset + j - 1], gold)
            for j, gold in enumerate(y_ids)
        ]

    def _score_masked(self, x_ids, y_ids):
        tok = self.tokenizer
        cls_id = tok.cls_token_id
        sep_id = tok.sep_token_id
        prefix = ([cls_id] if cls_id is not None else [])
        suffix = ([sep_id] if sep_id is not None else [])
        x_ids = self._fit_context(x_ids, len(y_ids), len(prefix) + len(suffix))
        base = prefix + x_ids + y_ids + suffix
        offset = len(prefix) + len(x_ids)
        mask_id = tok.mask_token_id
        scores: list[tuple[float, float]] = []
        for start in range(0, len(y_ids), self.batch_size):
            positions = range(start, min(start + self.batch_size, len(y_ids)))
            batch = []
            for j in positions:
                ids = list(base)
                ids[offset + j] = mask_id
                batch.append(ids)
            ids_tensor = torch.tensor(batch, dtype=torch.long, device=self.device)
            logits = self.model(input_ids=ids_tensor).logits
            self.forward_rows += len(batch)
            for row, j in enumerate(positions):
                scores.append(scores_from_logits(logits[row, offset + j], y_ids[j]))
        return scores

    def _score_encdec(self, reference, y_ids):
        text = self.template.format(reference=reference)
        enc = self.tokenizer(
            text,
            truncation=True,
            max_length=self._budget(),
            return_tensors="pt",
        ).to(self.device)
        labels = torch.tensor([y_ids], dtype=torch.long, device=self.device)
        # the decoder shifts labels right internally, so logits[j] is the
        # teacher-forced prediction of y_j
        logits = self.model(**enc, labels=labels).logits[0]
        self.forward_rows += 1
        return [
            scores_from_logits(logits[j], gold) for j, gold in enumerate(y_ids)
        ]
