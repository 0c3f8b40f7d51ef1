"""Bridge between transformer checkpoints and the statistics engine: token
scoring in three modes, record-file dumps, and a minimal weighted trainer."""

from .datasets import DatasetError, Example, load_examples
from .dump import DumpStats, dump_dataset
from .records import write_header, write_record
from .scoring import (
    EmptyTargetError,
    ModeMismatchError,
    Scorer,
    ScoringError,
    ScoringMode,
    scores_from_logits,
)
from .training import TrainingError, TrainResult, example_loss, weighted_train
from .weights import WeightFile, WeightFileError, read_weight_file

__version__ = "0.1.0"

__all__ = [
    "DatasetError",
    "DumpStats",
    "EmptyTargetError",
    "Example",
    "ModeMismatchError",
    "Scorer",
    "ScoringError",
    "ScoringMode",
    "TrainResult",
    "TrainingError",
    "WeightFile",
    "WeightFileError",
    "dump_dataset",
    "example_loss",
    "load_examples",
    "read_weight_file",
    "scores_from_logits",
    "weighted_train",
    "write_header",
    "write_record",
]
