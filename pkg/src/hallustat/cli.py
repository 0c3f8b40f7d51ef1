"""Command-line surface: analyze / summarize / relative / weights /
histogram / metrics.

Input files are streamed record by record (bounded memory per record); only
the per-cell metric scalars are held in memory. All output is buffered and
emitted in deterministic sorted order, so identical inputs and flags produce
byte-identical output regardless of parallelism (HALLUSTAT_THREADS caps the
worker count for multi-file commands).

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 statistical
precondition failure (missing label group, zero baseline, empty report set).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Callable, Iterable, Sequence

from .analysis import (
    DEFAULT_ALPHA,
    CellMeta,
    DistReport,
    distinguishability_from_values,
    histogram,
    relative_series,
    summarize,
)
from .diststats import KsResult
from .errors import HallustatError, ParseError, PreconditionError, ValidationError
from .ingest import Label, read_stream
from .metrics import MetricKind, metric_value
from .weighting import WeightVector, normalize_weights, raw_weight, write_weight_file

THREADS_ENV = "HALLUSTAT_THREADS"

ANALYZE_FIELDS = (
    "file",
    "model",
    "dataset",
    "metric",
    "n_hall",
    "n_ent",
    "ks_stat",
    "p_value",
    "wasserstein",
    "mean_hall",
    "mean_ent",
    "alpha",
    "significant",
)
SUMMARY_FIELDS = ("group", "sig_ratio", "sig_counts", "ks_mean", "ks_std")
RELATIVE_FIELDS = ("dataset", "metric", "baseline", "model", "relative_wasserstein")
HISTOGRAM_FIELDS = (
    "file",
    "model",
    "dataset",
    "metric",
    "group",
    "n",
    "mean",
    "edges",
    "frequencies",
)
METRICS_FIELDS = ("id", "label", "metric", "value")

_GROUP_ORDER = ("hallucinated", "entailed", "unlabeled")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # the spec's exit-code contract reserves 1 for usage errors; argparse
    # would exit with 2
    def error(self, message):
        raise UsageError(message)


def _metric_kinds(choice: str) -> list[MetricKind]:
    if choice == "both":
        return [MetricKind.LOGPROB, MetricKind.ENTROPY]
    return [MetricKind(choice)]


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError(f"{THREADS_ENV} must be >= 1, got {value}")
    return value


def _parallel_map(fn: Callable, items: Sequence, threads: int) -> list:
    """Order-preserving map; results are independent of the worker count."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _fmt_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return " ".join(repr(float(v)) for v in value)
    return str(value)


def _emit(rows: list[dict], fields: Sequence[str], fmt: str) -> str:
    if fmt == "jsonl":
        return "".join(
            json.dumps({k: row[k] for k in fields}, ensure_ascii=False) + "\n"
            for row in rows
        )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_fmt_cell(row[k]) for k in fields])
    return buf.getvalue()


def _write_output(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


@contextmanager
def _file_context(path: str):
    """Prefix errors with the file they came from, keeping their type (and
    therefore the exit code) intact."""
    try:
        yield
    except HallustatError as exc:
        exc.args = (f"{path}: {exc.args[0]}",) if exc.args else (path,)
        raise


# ---------------------------------------------------------------------------
# analyze

def _scan_file(path: str, kinds: list[MetricKind]) -> tuple[dict, dict]:
    """One streaming pass: per-metric, per-label value lists plus file meta."""
    values: dict[MetricKind, dict[Label, list[float]]] = {
        kind: {label: [] for label in Label} for kind in kinds
    }
    with _file_context(path), open(path, "r", encoding="utf-8") as fh:
        header, records = read_stream(fh)
        for point in records:
            for kind in kinds:
                values[kind][point.label].append(metric_value(point, kind))
    model = header.model if header is not None else "unknown"
    dataset = header.dataset if header is not None else "unknown"
    return values, {"model": model, "dataset": dataset}


def _analyze_file(path: str, kinds: list[MetricKind], alpha: float) -> list[dict]:
    values, meta = _scan_file(path, kinds)
    rows = []
    for kind in kinds:
        with _file_context(path):
            report = distinguishability_from_values(
                values[kind][Label.HALLUCINATED],
                values[kind][Label.ENTAILED],
                kind,
                alpha=alpha,
                model=meta["model"],
                dataset=meta["dataset"],
            )
        rows.append(
            {
                "file": path,
                "model": report.meta.model,
                "dataset": report.meta.dataset,
                "metric": kind.value,
                "n_hall": report.n_hall,
                "n_ent": report.n_ent,
                "ks_stat": report.ks.statistic,
                "p_value": report.ks.p_value,
                "wasserstein": report.wasserstein,
                "mean_hall": report.mean_hall,
                "mean_ent": report.mean_ent,
                "alpha": report.alpha,
                "significant": report.significant,
            }
        )
    return rows


def cmd_analyze(args) -> str:
    kinds = _metric_kinds(args.metric)
    threads = _thread_count()
    per_file = _parallel_map(
        lambda path: _analyze_file(path, kinds, args.alpha), args.inputs, threads
    )
    rows = [row for rows in per_file for row in rows]
    rows.sort(key=lambda r: (r["file"], r["metric"]))
    return _emit(rows, ANALYZE_FIELDS, args.format)


# ---------------------------------------------------------------------------
# report-record input (summarize / relative consume analyze output)

_REPORT_FLOATS = ("ks_stat", "p_value", "wasserstein", "mean_hall", "mean_ent", "alpha")
_REPORT_INTS = ("n_hall", "n_ent")


def _coerce_report_row(row: dict, path: str, line_no: int) -> dict:
    out = dict(row)
    try:
        for key in _REPORT_INTS:
            out[key] = int(out[key])
        for key in _REPORT_FLOATS:
            out[key] = float(out[key])
        if isinstance(out["significant"], str):
            out["significant"] = out["significant"].strip().lower() == "true"
        else:
            out["significant"] = bool(out["significant"])
        out["metric"] = MetricKind(out["metric"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ValidationError(
            f"{path}: bad report record: {exc}", line_no
        ) from exc
    return out


def _read_report_rows(paths: Sequence[str]) -> list[dict]:
    rows = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        stripped = text.lstrip()
        if not stripped:
            continue
        if stripped.startswith("{"):
            for line_no, line in enumerate(text.splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    raw = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(
                        f"{path}: invalid report record: {exc.msg}", line_no
                    ) from exc
                rows.append(_coerce_report_row(raw, path, line_no))
        else:
            reader = csv.DictReader(io.StringIO(text))
            for line_no, raw in enumerate(reader, start=2):
                rows.append(_coerce_report_row(raw, path, line_no))
    return rows


def _report_from_row(row: dict) -> DistReport:
    ks = KsResult(
        statistic=row["ks_stat"],
        p_value=row["p_value"],
        n=row["n_hall"],
        m=row["n_ent"],
    )
    return DistReport(
        meta=CellMeta(
            model=row.get("model", "unknown"),
            dataset=row.get("dataset", "unknown"),
            metric=row["metric"],
        ),
        ks=ks,
        wasserstein=row["wasserstein"],
        mean_hall=row["mean_hall"],
        mean_ent=row["mean_ent"],
        n_hall=row["n_hall"],
        n_ent=row["n_ent"],
        alpha=row["alpha"],
        significant=row["significant"],
    )


def cmd_summarize(args) -> str:
    rows = _read_report_rows(args.inputs)
    if not rows:
        raise PreconditionError("no report records on input")
    reports = [_report_from_row(row) for row in rows]
    fields = [f.strip() for f in args.group_by.split(",") if f.strip()]
    if not fields:
        raise UsageError("--group-by needs at least one report field")
    valid = {"model", "dataset", "metric"}
    unknown = set(fields) - valid
    if unknown:
        raise UsageError(
            f"--group-by fields must be among {sorted(valid)}, got {sorted(unknown)}"
        )

    def key(report: DistReport) -> str:
        parts = []
        for f in fields:
            value = getattr(report.meta, f)
            parts.append(value.value if isinstance(value, MetricKind) else value)
        return "|".join(parts)

    out_rows = []
    for row in summarize(reports, key):
        out_rows.append(
            {
                "group": row.group,
                "sig_ratio": f"{100.0 * row.sig_count / row.total:.2f}%",
                "sig_counts": f"({row.sig_count} / {row.total})",
                "ks_mean": row.ks_mean,
                "ks_std": row.ks_std,
            }
        )
    return _emit(out_rows, SUMMARY_FIELDS, args.format)


def cmd_relative(args) -> str:
    rows = _read_report_rows(args.inputs)
    if not rows:
        raise PreconditionError("no report records on input")
    reports = [_report_from_row(row) for row in rows]
    groups: dict[tuple[str, str], list[DistReport]] = {}
    for report in reports:
        groups.setdefault(
            (report.meta.dataset, report.meta.metric.value), []
        ).append(report)
    out_rows = []
    for (dataset, metric) in sorted(groups):
        members = groups[(dataset, metric)]
        if args.baseline is None:
            baseline_index = 0
        else:
            matches = [
                i for i, r in enumerate(members) if r.meta.model == args.baseline
            ]
            if not matches:
                raise PreconditionError(
                    f"baseline {args.baseline!r} not present in "
                    f"(dataset={dataset}, metric={metric})"
                )
            baseline_index = matches[0]
        series = relative_series(members, baseline_index)
        for entry_key, value in series.entries:
            out_rows.append(
                {
                    "dataset": dataset,
                    "metric": metric,
                    "baseline": series.baseline_key,
                    "model": entry_key,
                    "relative_wasserstein": value,
                }
            )
    return _emit(out_rows, RELATIVE_FIELDS, args.format)


# ---------------------------------------------------------------------------
# per-example metric dump

def cmd_metrics(args) -> str:
    """Per-example metric values in stream order, for downstream plotting."""
    kinds = _metric_kinds(args.metric)
    rows = []
    for path in args.inputs:
        with _file_context(path), open(path, "r", encoding="utf-8") as fh:
            _, records = read_stream(fh)
            for point in records:
                for kind in kinds:
                    rows.append(
                        {
                            "id": point.id,
                            "label": point.label.value,
                            "metric": kind.value,
                            "value": metric_value(point, kind),
                        }
                    )
    return _emit(rows, METRICS_FIELDS, args.format)


# ---------------------------------------------------------------------------
# weights

def cmd_weights(args) -> str:
    mode = MetricKind(args.weights_mode)
    ids: list[str] = []
    raw: list[float] = []
    with _file_context(args.input), open(args.input, "r", encoding="utf-8") as fh:
        header, records = read_stream(fh)
        for point in records:
            ids.append(point.id)
            raw.append(raw_weight(metric_value(point, mode), mode))
    if not ids:
        raise PreconditionError("cannot weight an empty record file")
    weights = normalize_weights(raw, temperature=args.temperature)
    wv = WeightVector(
        entries=tuple(zip(ids, (float(w) for w in weights))),
        mode=mode,
        reference_model=header.model if header is not None else "unknown",
    )
    buf = io.StringIO()
    write_weight_file(wv, buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# histogram

def _histogram_file(path: str, kinds: list[MetricKind], bins: int | str) -> list[dict]:
    values, meta = _scan_file(path, kinds)
    rows = []
    for kind in kinds:
        for label in Label:
            group = values[kind][label]
            if not group:
                continue
            result = histogram(group, bins=bins)
            rows.append(
                {
                    "file": path,
                    "model": meta["model"],
                    "dataset": meta["dataset"],
                    "metric": kind.value,
                    "group": label.value,
                    "n": len(group),
                    "mean": result.mean,
                    "edges": [float(e) for e in result.edges],
                    "frequencies": [float(f) for f in result.frequencies],
                }
            )
    return rows


def cmd_histogram(args) -> str:
    kinds = _metric_kinds(args.metric)
    bins = _parse_bins(args.bins)
    threads = _thread_count()
    per_file = _parallel_map(
        lambda path: _histogram_file(path, kinds, bins), args.inputs, threads
    )
    rows = [row for rows in per_file for row in rows]
    rows.sort(
        key=lambda r: (r["file"], r["metric"], _GROUP_ORDER.index(r["group"]))
    )
    return _emit(rows, HISTOGRAM_FIELDS, args.format)


def _parse_bins(spec: str) -> int | str:
    if spec == "fd":
        return "fd"
    try:
        count = int(spec)
    except ValueError:
        raise UsageError(f"--bins must be 'fd' or a positive integer, got {spec!r}") from None
    if count < 1:
        raise UsageError(f"--bins must be >= 1, got {count}")
    return count


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(
        prog="hallustat",
        description="Distinguishability statistics over token-score record files.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_common(p):
        p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
        p.add_argument("--out", default=None, help="output path (default stdout)")

    p_analyze = sub.add_parser("analyze", help="per-cell KS/Wasserstein reports")
    p_analyze.add_argument("inputs", nargs="+", help="record files, one cell each")
    p_analyze.add_argument(
        "--metric", choices=("logprob", "entropy", "both"), default="both"
    )
    p_analyze.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    add_common(p_analyze)
    p_analyze.set_defaults(fn=cmd_analyze)

    p_sum = sub.add_parser("summarize", help="aggregate analyze reports")
    p_sum.add_argument("inputs", nargs="+", help="report files from analyze")
    p_sum.add_argument(
        "--group-by",
        default="metric",
        help="comma-separated report fields (model, dataset, metric)",
    )
    add_common(p_sum)
    p_sum.set_defaults(fn=cmd_summarize)

    p_rel = sub.add_parser(
        "relative", help="Wasserstein distances relative to a baseline report"
    )
    p_rel.add_argument("inputs", nargs="+", help="report files from analyze")
    p_rel.add_argument(
        "--baseline",
        default=None,
        help="model key of the baseline entry (default: first report per series)",
    )
    add_common(p_rel)
    p_rel.set_defaults(fn=cmd_relative)

    p_w = sub.add_parser("weights", help="training loss weights from a record file")
    p_w.add_argument("input", help="record file scored by the reference model")
    p_w.add_argument(
        "--weights-mode", choices=("entropy", "logprob"), required=True
    )
    p_w.add_argument(
        "--temperature",
        type=float,
        default=1.0,
        help="softmax temperature; 1.0 is the plain algorithm (extension)",
    )
    p_w.add_argument("--out", default=None, help="weight file path (default stdout)")
    p_w.set_defaults(fn=cmd_weights)

    p_h = sub.add_parser("histogram", help="relative-frequency histograms per group")
    p_h.add_argument("inputs", nargs="+", help="record files")
    p_h.add_argument(
        "--metric", choices=("logprob", "entropy", "both"), default="both"
    )
    p_h.add_argument("--bins", default="fd", help="'fd' or a positive bin count")
    add_common(p_h)
    p_h.set_defaults(fn=cmd_histogram)

    p_m = sub.add_parser("metrics", help="per-example metric values, stream order")
    p_m.add_argument("inputs", nargs="+", help="record files")
    p_m.add_argument(
        "--metric", choices=("logprob", "entropy", "both"), default="both"
    )
    add_common(p_m)
    p_m.set_defaults(fn=cmd_metrics)

    return parser


def main(argv: Iterable[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
        if hasattr(args, "alpha") and not 0.0 < args.alpha < 1.0:
            raise UsageError(f"--alpha must lie in (0, 1), got {args.alpha}")
        if hasattr(args, "temperature") and not args.temperature > 0.0:
            raise UsageError(f"--temperature must be > 0, got {args.temperature}")
        text = args.fn(args)
    except UsageError as exc:
        print(f"hallustat: usage error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, ValidationError) as exc:
        print(f"hallustat: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"hallustat: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"hallustat: {exc}", file=sys.stderr)
        return 2
    except HallustatError as exc:
        print(f"hallustat: {exc}", file=sys.stderr)
        return 2
    _write_output(text, args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
