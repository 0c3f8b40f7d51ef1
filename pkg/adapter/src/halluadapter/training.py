"""Minimal weighted fine-tuning loop with step checkpoints.

Each example's loss is its mean token cross-entropy over the target tokens
only (context tokens are excluded from the loss, matching what the scorer
scores). A batch's loss is the mean over examples of w_i * loss_i, with the
weights validated against the engine's weight file. With every weight at 1.0
the arithmetic is bit-identical to unweighted training, since multiplying by
1.0 is exact.

Batches walk the dataset in input order (no shuffling), so a fixed seed fixes
the whole trajectory; the seed still drives dropout. Checkpoints are
`save_pretrained` directories, one per requested step, so the scorer can be
re-run per checkpoint; step 0 is the untouched starting model.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import torch

from .datasets import Example


class TrainingError(Exception):
    pass


@dataclass(frozen=True)
class TrainResult:
    losses: list[float]
    checkpoints: list[tuple[int, str]]


def _encode_example(model, tokenizer, example: Example, template: str,
                    max_length: int, device: str):
    y_ids = tokenizer(example.target, add_special_tokens=False)["input_ids"]
    if not y_ids:
        raise TrainingError(f"example {example.id}: target has no tokens")
    if getattr(model.config, "is_encoder_decoder", False):
        enc = tokenizer(
            template.format(reference=example.reference),
            truncation=True,
            max_length=max_length,
            return_tensors="pt",
        ).to(device)
        labels = torch.tensor([y_ids], dtype=torch.long, device=device)
        return {**enc, "labels": labels}
    x_ids = tokenizer(
        template.format(reference=example.reference), add_special_tokens=False
    )["input_ids"]
    budget = max_length - len(y_ids)
    if budget < 1:
        raise TrainingError(
            f"example {example.id}: target exceeds the {max_length}-token budget"
        )
    x_ids = list(x_ids[-budget:]) if x_ids else [tokenizer.bos_token_id]
    if x_ids[0] is None:
        raise TrainingError(f"example {example.id}: empty context and no BOS token")
    ids = torch.tensor([x_ids + y_ids], dtype=torch.long, device=device)
    labels = torch.tensor(
        [[-100] * len(x_ids) + list(y_ids)], dtype=torch.long, device=device
    )
    return {"input_ids": ids, "labels": labels}


def example_loss(model, tokenizer, example: Example, template: str,
                 max_length: int, device: str) -> torch.Tensor:
    """Mean token cross-entropy of one example's target."""
    batch = _encode_example(model, tokenizer, example, template, max_length, device)
    return model(**batch).loss


def weighted_train(
    model,
    tokenizer,
    examples: Sequence[Example],
    *,
    steps: int,
    weights: Mapping[str, float] | None = None,
    batch_size: int = 4,
    lr: float = 1e-4,
    seed: int = 0,
    template: str = "{reference} ",
    max_length: int = 512,
    device: str = "cpu",
    out_dir: str | Path | None = None,
    checkpoint_steps: Sequence[int] | None = None,
) -> TrainResult:
    """Run `steps` optimization steps of weighted training.

    `weights` maps example id to its loss weight and must cover every
    training id (a superset is fine; the trainer's data order is decoupled
    from weight computation order). None means unweighted, i.e. all ones.
    """
    if not examples:
        raise TrainingError("no training examples")
    if steps < 0:
        raise TrainingError("steps must be >= 0")
    if weights is not None:
        missing = [ex.id for ex in examples if ex.id not in weights]
        if missing:
            raise TrainingError(
                f"weight file does not cover training id(s): {', '.join(missing[:5])}"
            )
        w_of = {ex.id: float(weights[ex.id]) for ex in examples}
    else:
        w_of = {ex.id: 1.0 for ex in examples}

    if checkpoint_steps is None:
        wanted = {0, steps}
    else:
        wanted = {int(s) for s in checkpoint_steps if 0 <= int(s) <= steps}

    torch.manual_seed(seed)
    model.to(device)
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr)

    checkpoints: list[tuple[int, str]] = []

    def save(step: int) -> None:
        if out_dir is None or step not in wanted:
            return
        path = Path(out_dir) / f"step-{step:06d}"
        model.save_pretrained(path)
        tokenizer.save_pretrained(path)
        checkpoints.append((step, str(path)))

    save(0)
    losses: list[float] = []
    cursor = 0
    model.train()
    for step in range(1, steps + 1):
        batch = [examples[(cursor + k) % len(examples)] for k in range(batch_size)]
        cursor = (cursor + batch_size) % len(examples)
        optimizer.zero_grad()
        weighted = [
            w_of[ex.id]
            * example_loss(model, tokenizer, ex, template, max_length, device)
            for ex in batch
        ]
        loss = torch.stack(weighted).mean()
        loss.backward()
        optimizer.step()
        losses.append(float(loss.detach()))
        save(step)
    model.eval()
    return TrainResult(losses=losses, checkpoints=checkpoints)
