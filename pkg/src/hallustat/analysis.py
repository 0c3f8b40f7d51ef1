"""Distinguishability pipeline: per-cell reports, summaries, relative series,
and histogram export.

A "cell" is one (model, dataset, metric) combination. Its report compares the
hallucinated and entailed metric distributions with the KS test and the
Wasserstein-1 distance and records both group means, so the direction of the
gap (which group sits higher) stays assertable downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .diststats import Ecdf, KsResult, ks_test, wasserstein1
from .errors import PreconditionError
from .ingest import ExampleCollection, Label
from .metrics import MetricKind, compute_metric

DEFAULT_ALPHA = 0.01


@dataclass(frozen=True)
class CellMeta:
    model: str
    dataset: str
    metric: MetricKind


@dataclass(frozen=True)
class DistReport:
    """Distinguishability of hallucinated vs entailed for one cell."""

    meta: CellMeta
    ks: KsResult
    wasserstein: float
    mean_hall: float
    mean_ent: float
    n_hall: int
    n_ent: int
    alpha: float
    significant: bool


@dataclass(frozen=True)
class SummaryRow:
    """Aggregate over a group of cell reports: how often the KS test was
    significant, and the mean/population-std of the KS statistics."""

    group: str
    sig_count: int
    total: int
    ks_mean: float
    ks_std: float

    @property
    def sig_ratio(self) -> float:
        return self.sig_count / self.total


@dataclass(frozen=True)
class RelativeSeries:
    """Wasserstein distances divided by a chosen baseline entry's distance."""

    baseline_key: str
    entries: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class HistogramResult:
    edges: np.ndarray
    frequencies: np.ndarray
    mean: float


def distinguishability_from_values(
    hall_values: Sequence[float],
    ent_values: Sequence[float],
    kind: MetricKind,
    alpha: float = DEFAULT_ALPHA,
    model: str = "unknown",
    dataset: str = "unknown",
) -> DistReport:
    """Core of the per-cell pipeline, on already-extracted metric values."""
    if not 0.0 < alpha < 1.0:
        raise PreconditionError(f"alpha must lie in (0, 1), got {alpha!r}")
    if len(hall_values) == 0:
        raise PreconditionError("no hallucinated examples in the collection")
    if len(ent_values) == 0:
        raise PreconditionError("no entailed examples in the collection")
    hall = Ecdf.from_sample(hall_values)
    ent = Ecdf.from_sample(ent_values)
    ks = ks_test(hall, ent)
    return DistReport(
        meta=CellMeta(model=model, dataset=dataset, metric=kind),
        ks=ks,
        wasserstein=wasserstein1(hall, ent),
        mean_hall=sum(hall_values) / len(hall_values),
        mean_ent=sum(ent_values) / len(ent_values),
        n_hall=len(hall_values),
        n_ent=len(ent_values),
        alpha=alpha,
        significant=ks.p_value < alpha,
    )


def distinguishability(
    c: ExampleCollection,
    kind: MetricKind,
    alpha: float = DEFAULT_ALPHA,
    model: str | None = None,
    dataset: str | None = None,
) -> DistReport:
    """Compute the metric per point, split by label, and fill a DistReport.

    Model/dataset identifiers default to the collection's file header when
    present. Deterministic for a given collection.
    """
    sample = compute_metric(c, kind)
    if model is None:
        model = c.header.model if c.header is not None else "unknown"
    if dataset is None:
        dataset = c.header.dataset if c.header is not None else "unknown"
    return distinguishability_from_values(
        sample.by_label(Label.HALLUCINATED),
        sample.by_label(Label.ENTAILED),
        kind,
        alpha=alpha,
        model=model,
        dataset=dataset,
    )


def summarize(
    reports: Sequence[DistReport],
    group_by: Callable[[DistReport], str],
) -> list[SummaryRow]:
    """Group reports and aggregate significance ratio and KS moments.

    Cells are unweighted (each report counts once regardless of its sample
    sizes); the standard deviation is the population one (divide by n).
    Rows come back sorted by group key.
    """
    if len(reports) == 0:
        raise PreconditionError("cannot summarize zero reports")
    groups: dict[str, list[DistReport]] = {}
    for report in reports:
        groups.setdefault(group_by(report), []).append(report)
    rows = []
    for key in sorted(groups):
        members = groups[key]
        stats = np.array([r.ks.statistic for r in members], dtype=np.float64)
        rows.append(
            SummaryRow(
                group=key,
                sig_count=sum(1 for r in members if r.significant),
                total=len(members),
                ks_mean=float(stats.mean()),
                ks_std=float(stats.std()),
            )
        )
    return rows


def relative_series(
    reports: Sequence[DistReport],
    baseline_index: int,
    key: Callable[[DistReport], str] = lambda r: r.meta.model,
) -> RelativeSeries:
    """Divide every report's Wasserstein distance by the baseline report's.

    All reports must share (dataset, metric); the baseline entry comes out
    exactly 1.0. A zero baseline distance means the baseline showed no
    distinguishability at all and is an error rather than an infinite ratio.
    (A zero in a non-baseline entry yields a 0.0 ratio; it signals identical
    group distributions in that cell.)
    """
    if len(reports) == 0:
        raise PreconditionError("cannot build a relative series from zero reports")
    if not 0 <= baseline_index < len(reports):
        raise PreconditionError(
            f"baseline index {baseline_index} out of range for {len(reports)} reports"
        )
    cells = {(r.meta.dataset, r.meta.metric) for r in reports}
    if len(cells) > 1:
        raise PreconditionError(
            f"relative series needs a single (dataset, metric), got {sorted(map(str, cells))}"
        )
    base = reports[baseline_index]
    if base.wasserstein == 0.0:
        raise PreconditionError(
            "baseline Wasserstein distance is zero; relative change is undefined"
        )
    entries = tuple((key(r), r.wasserstein / base.wasserstein) for r in reports)
    return RelativeSeries(baseline_key=key(base), entries=entries)


# heavy outliers with a near-zero IQR would otherwise demand a bin count
# far past anything plottable (or allocatable)
_FD_MAX_BINS = 1000


def _fd_bin_count(arr: np.ndarray) -> int:
    """Freedman-Diaconis rule; falls back to 10 equal bins when IQR = 0."""
    q75, q25 = np.percentile(arr, [75.0, 25.0])
    iqr = q75 - q25
    if iqr <= 0.0:
        return 10
    width = 2.0 * iqr / (arr.size ** (1.0 / 3.0))
    span = float(arr.max() - arr.min())
    if span <= 0.0 or width <= 0.0:
        return 10
    return max(1, min(math.ceil(span / width), _FD_MAX_BINS))


def histogram(
    values: Sequence[float] | np.ndarray,
    bins: int | str = "fd",
) -> HistogramResult:
    """Relative-frequency histogram plus the raw mean.

    `bins` is either a positive bin count or "fd" (Freedman-Diaconis, with a
    10-bin fallback when the IQR is zero). Equal-width bins span [min, max];
    every bin is half-open except the last, whose right edge is inclusive, so
    the frequencies always sum to 1. A degenerate sample (min == max) is
    spread over [v - 0.5, v + 0.5]. The mean is the arithmetic mean of the
    raw values, independent of the binning.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise PreconditionError("histogram needs a non-empty 1-d value list")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError("histogram values must be finite")
    if isinstance(bins, str):
        if bins != "fd":
            raise PreconditionError(f"unknown binning spec {bins!r}")
        n_bins = _fd_bin_count(arr)
    else:
        n_bins = int(bins)
        if n_bins < 1:
            raise PreconditionError(f"bin count must be >= 1, got {bins!r}")
    lo = float(arr.min())
    hi = float(arr.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, n_bins + 1)
    counts, _ = np.histogram(arr, bins=edges)
    return HistogramResult(
        edges=edges,
        frequencies=counts / arr.size,
        mean=float(arr.sum() / arr.size),
    )
