"""Per-example confidence metrics over token scores.

Two metrics, both plain arithmetic means over an example's target positions:
the mean gold-token log probability ("logprob", <= 0) and the mean predictive
entropy ("entropy", >= 0, nats). Computing one value per example over a whole
collection produces the empirical metric distribution that the two-sample
statistics consume.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping

from .errors import PreconditionError
from .ingest import ExampleCollection, ExamplePoint, Label


class MetricKind(str, Enum):
    LOGPROB = "logprob"
    ENTROPY = "entropy"


@dataclass(frozen=True)
class MetricSample:
    """Per-example metric values with their labels, in collection order."""

    kind: MetricKind
    values: tuple[tuple[str, float], ...]
    label_of: Mapping[str, Label]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[tuple[str, float]]:
        return iter(self.values)

    def value_map(self) -> dict[str, float]:
        return dict(self.values)

    def by_label(self, label: Label) -> list[float]:
        return [v for i, v in self.values if self.label_of[i] is label]


def mean_logprob(p: ExamplePoint) -> float:
    """Mean of the gold-token log probabilities; 0 iff every token has
    probability exactly 1."""
    return sum(t.logp_gold for t in p.tokens) / len(p.tokens)


def mean_entropy(p: ExamplePoint) -> float:
    """Mean of the per-position predictive entropies, in nats."""
    return sum(t.entropy for t in p.tokens) / len(p.tokens)


def metric_value(p: ExamplePoint, kind: MetricKind) -> float:
    if kind is MetricKind.LOGPROB:
        return mean_logprob(p)
    return mean_entropy(p)


def compute_metric(c: ExampleCollection, kind: MetricKind) -> MetricSample:
    """One metric value per point, order-preserving, labels carried through."""
    if len(c) == 0:
        raise PreconditionError("cannot compute a metric over an empty collection")
    values = tuple((p.id, metric_value(p, kind)) for p in c)
    label_of = {p.id: p.label for p in c}
    return MetricSample(kind=kind, values=values, label_of=label_of)
