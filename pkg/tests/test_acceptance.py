"""Acceptance gate: every criterion runs at its stated tolerance and prints
one pass/fail line (run with `pytest tests/test_acceptance.py -s` to see them
as they go)."""

import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from hallustat import (
    Ecdf,
    ExampleCollection,
    ExamplePoint,
    Label,
    MetricKind,
    TokenScore,
    distinguishability,
    kolmogorov_sf,
    ks_pvalue,
    ks_statistic,
    normalize_weights,
    raw_weight,
    wasserstein1,
)
from hallustat.cli import main
from hallustat.ingest import FileHeader, serialize_header

pytestmark = pytest.mark.filterwarnings("ignore::hallustat.SmallSampleWarning")


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL")
        raise
    else:
        print(f"[ACCEPTANCE] {name}: PASS")


def test_ks_oracle_equivalence():
    with criterion("KS oracle equivalence (1000 pairs, exact)"):
        started = time.monotonic()
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n, m = rng.integers(1, 201, size=2)
            # lattice values force deliberate ties within and across samples
            a = rng.integers(0, 50, size=n) / 8.0
            b = rng.integers(0, 50, size=m) / 8.0
            points = np.concatenate([a, b])
            f1 = (a[None, :] <= points[:, None]).sum(axis=1) / n
            f2 = (b[None, :] <= points[:, None]).sum(axis=1) / m
            brute = float(np.max(np.abs(f1 - f2)))
            fast = ks_statistic(Ecdf.from_sample(a), Ecdf.from_sample(b))
            assert fast == brute  # bitwise: same arithmetic on counts
        elapsed = time.monotonic() - started
        assert elapsed < 10.0, f"took {elapsed:.1f}s, budget 10s"


def test_wasserstein_oracle_equivalence():
    with criterion("Wasserstein oracle equivalence (pairing 1e-12, Riemann 1e-6)"):
        started = time.monotonic()
        rng = np.random.default_rng(11)
        for _ in range(1000):
            n = int(rng.integers(1, 201))
            a = rng.normal(size=n)
            b = rng.normal(0.5, 1.5, size=n)
            w = wasserstein1(Ecdf.from_sample(a), Ecdf.from_sample(b))
            pairing = float(np.mean(np.abs(np.sort(a) - np.sort(b))))
            assert abs(w - pairing) <= 1e-12

        cells = 4_000_000  # midpoint-rule error is bounded by 2*range/cells
        for _ in range(50):
            n, m = rng.integers(2, 201, size=2)
            a = np.sort(rng.uniform(0.0, 1.0, size=n))
            b = np.sort(rng.uniform(0.0, 1.0, size=m))
            w = wasserstein1(Ecdf.from_sample(a), Ecdf.from_sample(b))
            lo, hi = min(a[0], b[0]), max(a[-1], b[-1])
            edges = np.linspace(lo, hi, cells + 1)
            mids = 0.5 * (edges[:-1] + edges[1:])
            f1 = np.searchsorted(a, mids, side="right") / n
            f2 = np.searchsorted(b, mids, side="right") / m
            riemann = float(np.sum(np.abs(f1 - f2)) * (hi - lo) / cells)
            assert abs(w - riemann) <= 1e-6
        elapsed = time.monotonic() - started
        assert elapsed < 30.0, f"took {elapsed:.1f}s, budget 30s"


def test_ks_test_calibration():
    with criterion("KS test calibration (critical coefficients + null rate)"):
        assert abs(kolmogorov_sf(1.358) - 0.05) <= 0.005
        assert abs(kolmogorov_sf(1.628) - 0.01) <= 0.002

        rng = np.random.default_rng(20240801)
        trials = 2000
        rejections = 0
        for _ in range(trials):
            a = Ecdf.from_sample(rng.standard_normal(500))
            b = Ecdf.from_sample(rng.standard_normal(500))
            if ks_pvalue(ks_statistic(a, b), 500, 500) < 0.01:
                rejections += 1
        rate = rejections / trials
        assert abs(rate - 0.01) <= 0.007, f"null rejection rate {rate:.4f}"


def test_synthetic_distinguishability():
    with criterion("synthetic normals N(0,1) vs N(1,1): D, W, significance"):
        rng = np.random.default_rng(1234)
        ent_draws = rng.standard_normal(1000)
        hall_draws = rng.standard_normal(1000) + 1.0
        # entropy values must be nonnegative; a common shift changes neither
        # the KS statistic nor the Wasserstein distance
        points = [
            ExamplePoint(
                id=f"h{i}",
                label=Label.HALLUCINATED,
                tokens=(TokenScore(-1.0, float(10.0 + v)),),
            )
            for i, v in enumerate(hall_draws)
        ] + [
            ExamplePoint(
                id=f"e{i}",
                label=Label.ENTAILED,
                tokens=(TokenScore(-1.0, float(10.0 + v)),),
            )
            for i, v in enumerate(ent_draws)
        ]
        c = ExampleCollection(points=tuple(points))
        report = distinguishability(c, MetricKind.ENTROPY, alpha=0.01)
        # analytic sup |Phi(x) - Phi(x-1)| = 2*Phi(0.5) - 1 = 0.38292...
        assert abs(report.ks.statistic - 0.3829) <= 0.05
        assert abs(report.wasserstein - 1.0) <= 0.1
        assert report.significant
        assert report.mean_hall > report.mean_ent


def test_weight_properties_at_scale():
    with criterion("weight properties (N=100k): sum, positivity, shift, order"):
        started = time.monotonic()
        rng = np.random.default_rng(5150)
        for n in (1, 10, 1000, 100_000):
            metric = rng.uniform(-12.0, 0.0, size=n)  # logprob-mean-like range
            raw_lp = np.array(
                [raw_weight(float(v), MetricKind.LOGPROB) for v in metric]
            )
            w = normalize_weights(raw_lp)
            assert abs(math.fsum(w) - n) <= 1e-9 * n
            assert np.all(w > 0.0)

            shifted = normalize_weights(raw_lp + 2.5)
            assert np.all(np.abs(shifted - w) <= 1e-12 * np.maximum(w, 1e-300))

            order = np.argsort(metric)
            w_sorted = w[order]
            gaps = np.diff(metric[order])
            increases = np.diff(w_sorted)
            assert np.all(increases[gaps > 1e-9] > 0.0)  # strict in logprob mode

            raw_ent = np.array(
                [raw_weight(float(v), MetricKind.ENTROPY) for v in metric]
            )
            w_ent = normalize_weights(raw_ent)[order]
            assert np.all(np.diff(w_ent)[gaps > 1e-9] < 0.0)  # strict decrease

        for n in (1, 3, 1000):
            uniform = normalize_weights(np.full(n, -4.25))
            assert list(uniform) == [1.0] * n  # exactly the unweighted regime
        elapsed = time.monotonic() - started
        assert elapsed < 5.0, f"took {elapsed:.1f}s, budget 5s"


def test_table_aggregation_shape(tmp_path, capsys):
    with criterion("summary shape: 53/60 significant -> 88.33% (53 / 60)"):
        report_path = tmp_path / "reports.jsonl"
        with open(report_path, "w", encoding="utf-8") as fh:
            for i in range(60):
                significant = i < 53
                fh.write(
                    json.dumps(
                        {
                            "file": f"f{i}", "model": f"m{i:02d}", "dataset": "d",
                            "metric": "logprob", "n_hall": 100, "n_ent": 100,
                            "ks_stat": 0.25 + 0.001 * i,
                            "p_value": 0.001 if significant else 0.5,
                            "wasserstein": 0.4, "mean_hall": -2.0,
                            "mean_ent": -1.0, "alpha": 0.01,
                            "significant": significant,
                        }
                    )
                    + "\n"
                )
        outputs = []
        for _ in range(2):
            code = main(["summarize", str(report_path)])
            captured = capsys.readouterr()
            assert code == 0, captured.err
            outputs.append(captured.out)
        assert outputs[0] == outputs[1]  # bit-stable across runs
        assert "88.33%" in outputs[0]
        assert "(53 / 60)" in outputs[0]


def test_analyze_determinism_across_thread_counts(tmp_path, capsys, monkeypatch):
    with criterion("cmd_analyze byte-identical at 1/4/16 threads"):
        rng = np.random.default_rng(31337)
        paths = []
        for i in range(6):
            path = tmp_path / f"cell{i}.jsonl"
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(
                    serialize_header(FileHeader("causal", f"model{i}", "demo")) + "\n"
                )
                for j in range(120):
                    label = "hallucinated" if j % 2 else "entailed"
                    bump = 0.8 if label == "hallucinated" else 0.0
                    tokens = [
                        [float(-abs(rng.normal(1.0 + bump, 0.4))),
                         float(abs(rng.normal(2.0 + bump, 0.5)))]
                        for _ in range(int(rng.integers(1, 6)))
                    ]
                    fh.write(
                        json.dumps({"id": f"x{j}", "label": label, "tokens": tokens})
                        + "\n"
                    )
            paths.append(str(path))

        outputs = []
        for threads in ("1", "4", "16"):
            monkeypatch.setenv("HALLUSTAT_THREADS", threads)
            code = main(["analyze", *paths, "--format", "csv"])
            captured = capsys.readouterr()
            assert code == 0, captured.err
            outputs.append(captured.out)
        assert outputs[0] == outputs[1] == outputs[2]
        assert len(outputs[0].splitlines()) == 1 + len(paths) * 2
