"""CLI: `halluadapter dump` scores a dataset into a record file;
`halluadapter train` runs the minimal weighted trainer.

A JSON config file can hold any of the long-option values (model, mode, data,
dataset, template, batch_size, device, max_length); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys

from .datasets import DatasetError, load_examples
from .dump import dump_dataset
from .scoring import Scorer, ScoringError, ScoringMode
from .training import TrainingError, weighted_train
from .weights import WeightFileError, read_weight_file

_CONFIG_KEYS = (
    "model", "mode", "data", "dataset", "template", "batch_size", "device",
    "max_length",
)


def _load_model(model_path: str, mode: ScoringMode):
    from transformers import (
        AutoModelForCausalLM,
        AutoModelForMaskedLM,
        AutoModelForSeq2SeqLM,
        AutoTokenizer,
    )

    loaders = {
        ScoringMode.CAUSAL: AutoModelForCausalLM,
        ScoringMode.MASKED: AutoModelForMaskedLM,
        ScoringMode.ENCDEC: AutoModelForSeq2SeqLM,
    }
    tokenizer = AutoTokenizer.from_pretrained(model_path)
    model = loaders[mode].from_pretrained(model_path)
    return model, tokenizer


def _apply_config(args: argparse.Namespace) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    with open(args.config, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    unknown = set(config) - set(_CONFIG_KEYS)
    if unknown:
        raise DatasetError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    for key, value in config.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    return args


def cmd_dump(args) -> int:
    args = _apply_config(args)
    for required in ("model", "mode", "data", "dataset"):
        if getattr(args, required, None) is None:
            raise DatasetError(f"dump needs --{required} (flag or config)")
    mode = ScoringMode(args.mode)
    model, tokenizer = _load_model(args.model, mode)
    scorer = Scorer(
        model=model,
        tokenizer=tokenizer,
        mode=mode,
        template=args.template or "{reference} ",
        device=args.device or "cpu",
        max_length=args.max_length,
        batch_size=args.batch_size or 16,
    )
    examples = load_examples(args.data)
    out = sys.stdout if args.out in (None, "-") else open(
        args.out, "w", encoding="utf-8"
    )
    try:
        stats = dump_dataset(
            scorer, examples, out, model_name=args.model, dataset_name=args.dataset
        )
    finally:
        if out is not sys.stdout:
            out.close()
    print(
        f"halluadapter: wrote {stats.written} records"
        + (f", skipped {stats.skipped}" if stats.skipped else ""),
        file=sys.stderr,
    )
    return 0


def cmd_train(args) -> int:
    args = _apply_config(args)
    for required in ("model", "data"):
        if getattr(args, required, None) is None:
            raise DatasetError(f"train needs --{required} (flag or config)")
    from transformers import AutoModelForCausalLM, AutoModelForSeq2SeqLM, AutoTokenizer
    from transformers import AutoConfig

    config = AutoConfig.from_pretrained(args.model)
    loader = (
        AutoModelForSeq2SeqLM
        if getattr(config, "is_encoder_decoder", False)
        else AutoModelForCausalLM
    )
    model = loader.from_pretrained(args.model)
    tokenizer = AutoTokenizer.from_pretrained(args.model)
    examples = load_examples(args.data)
    weight_map = None
    if args.weights is not None:
        with open(args.weights, "r", encoding="utf-8") as fh:
            weight_map = read_weight_file(fh).weights
    checkpoint_steps = None
    if args.checkpoint_steps:
        checkpoint_steps = [int(s) for s in args.checkpoint_steps.split(",")]
    result = weighted_train(
        model,
        tokenizer,
        examples,
        steps=args.steps,
        weights=weight_map,
        batch_size=args.batch_size or 4,
        lr=args.lr,
        seed=args.seed,
        template=args.template or "{reference} ",
        max_length=args.max_length or 512,
        device=args.device or "cpu",
        out_dir=args.out_dir,
        checkpoint_steps=checkpoint_steps,
    )
    for step, loss in enumerate(result.losses, start=1):
        print(f"step {step} loss {loss!r}")
    for step, path in result.checkpoints:
        print(f"checkpoint {step} {path}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="halluadapter",
        description="Produce token-score records from checkpoints; train with weights.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_dump = sub.add_parser("dump", help="score a dataset into a record file")
    p_dump.add_argument("--config", default=None, help="JSON config file")
    p_dump.add_argument("--model", default=None, help="checkpoint path or name")
    p_dump.add_argument("--mode", default=None, choices=[m.value for m in ScoringMode])
    p_dump.add_argument("--data", default=None, help="dataset JSONL path")
    p_dump.add_argument("--dataset", default=None, help="dataset name for the header")
    p_dump.add_argument("--template", default=None)
    p_dump.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p_dump.add_argument("--max-length", dest="max_length", type=int, default=None)
    p_dump.add_argument("--device", default=None)
    p_dump.add_argument("--out", default=None)
    p_dump.set_defaults(fn=cmd_dump)

    p_train = sub.add_parser("train", help="weighted fine-tuning with checkpoints")
    p_train.add_argument("--config", default=None, help="JSON config file")
    p_train.add_argument("--model", default=None)
    p_train.add_argument("--data", default=None)
    p_train.add_argument("--weights", default=None, help="weight file from the engine")
    p_train.add_argument("--steps", type=int, default=0)
    p_train.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p_train.add_argument("--lr", type=float, default=1e-4)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--template", default=None)
    p_train.add_argument("--max-length", dest="max_length", type=int, default=None)
    p_train.add_argument("--device", default=None)
    p_train.add_argument("--out-dir", dest="out_dir", default=None)
    p_train.add_argument(
        "--checkpoint-steps",
        dest="checkpoint_steps",
        default=None,
        help="comma-separated step numbers (default: 0 and the final step)",
    )
    p_train.set_defaults(fn=cmd_train)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (DatasetError, WeightFileError) as exc:
        print(f"halluadapter: {exc}", file=sys.stderr)
        return 2
    except (ScoringError, TrainingError) as exc:
        print(f"halluadapter: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"halluadapter: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
