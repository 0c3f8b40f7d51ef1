"""Statistics engine for token-level model confidence records: per-example
logprob/entropy metrics, two-sample KS and Wasserstein distinguishability,
and softmax loss-weight generation for weighted training."""

from .analysis import (
    CellMeta,
    DistReport,
    HistogramResult,
    RelativeSeries,
    SummaryRow,
    distinguishability,
    distinguishability_from_values,
    histogram,
    relative_series,
    summarize,
)
from .diststats import (
    Ecdf,
    KsResult,
    SmallSampleWarning,
    kolmogorov_sf,
    ks_pvalue,
    ks_statistic,
    ks_test,
    wasserstein1,
)
from .errors import (
    DuplicateIdError,
    HallustatError,
    ParseError,
    PreconditionError,
    ValidationError,
)
from .ingest import (
    ExampleCollection,
    ExamplePoint,
    FileHeader,
    Label,
    TokenScore,
    dump_collection,
    load_collection,
    load_collection_file,
    parse_record,
    serialize_header,
    serialize_record,
    split_by_label,
)
from .metrics import (
    MetricKind,
    MetricSample,
    compute_metric,
    mean_entropy,
    mean_logprob,
    metric_value,
)
from .weighting import (
    WeightVector,
    compute_weights,
    normalize_weights,
    raw_weight,
    read_weight_file,
    write_weight_file,
)

__version__ = "0.1.0"

__all__ = [
    "CellMeta",
    "DistReport",
    "DuplicateIdError",
    "Ecdf",
    "ExampleCollection",
    "ExamplePoint",
    "FileHeader",
    "HallustatError",
    "HistogramResult",
    "KsResult",
    "Label",
    "MetricKind",
    "MetricSample",
    "ParseError",
    "PreconditionError",
    "RelativeSeries",
    "SmallSampleWarning",
    "SummaryRow",
    "TokenScore",
    "ValidationError",
    "WeightVector",
    "compute_metric",
    "compute_weights",
    "distinguishability",
    "distinguishability_from_values",
    "dump_collection",
    "histogram",
    "kolmogorov_sf",
    "ks_pvalue",
    "ks_statistic",
    "ks_test",
    "load_collection",
    "load_collection_file",
    "mean_entropy",
    "mean_logprob",
    "metric_value",
    "normalize_weights",
    "parse_record",
    "raw_weight",
    "read_weight_file",
    "relative_series",
    "serialize_header",
    "serialize_record",
    "split_by_label",
    "summarize",
    "wasserstein1",
    "write_weight_file",
]
