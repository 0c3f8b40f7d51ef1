import io
import json
import shutil
import subprocess

import pytest

from halluadapter import Example, Scorer, ScoringMode, dump_dataset, load_examples


def example_set():
    return [
        Example("h0", "the cat sat on the mat", "a dog ran home", "hallucinated"),
        Example("e0", "the cat sat on the mat", "the cat sat", "entailed"),
        Example("u0", "the bird flew", "the bird flew home", "unlabeled"),
    ]


class TestDumpDataset:
    def test_header_and_records(self, causal_model, tokenizer):
        scorer = Scorer(causal_model, tokenizer, ScoringMode.CAUSAL)
        out = io.StringIO()
        stats = dump_dataset(
            scorer, example_set(), out, model_name="tiny-causal", dataset_name="demo"
        )
        assert stats.written == 3 and stats.skipped == 0
        lines = out.getvalue().splitlines()
        header = json.loads(lines[0])
        assert header["header"] == "token-scores/v1"
        assert header["scoring_mode"] == "causal"
        assert header["model"] == "tiny-causal"
        assert header["dataset"] == "demo"
        records = [json.loads(line) for line in lines[1:]]
        assert [r["id"] for r in records] == ["h0", "e0", "u0"]
        assert [r["label"] for r in records] == ["hallucinated", "entailed", "unlabeled"]
        for record in records:
            assert all(lp <= 0.0 and ent >= 0.0 for lp, ent in record["tokens"])

    def test_zero_token_target_skipped_with_warning(self, causal_model, tokenizer):
        scorer = Scorer(causal_model, tokenizer, ScoringMode.CAUSAL)
        out = io.StringIO()
        log = io.StringIO()
        examples = example_set() + [Example("bad", "the cat", "", "entailed")]
        stats = dump_dataset(
            scorer, examples, out, model_name="m", dataset_name="d", log=log
        )
        assert stats.written == 3 and stats.skipped == 1
        assert "bad" in log.getvalue()
        assert len(out.getvalue().splitlines()) == 1 + 3

    def test_ids_stable_across_runs(self, causal_model, tokenizer):
        scorer = Scorer(causal_model, tokenizer, ScoringMode.CAUSAL)
        first, second = io.StringIO(), io.StringIO()
        dump_dataset(scorer, example_set(), first, "m", "d")
        dump_dataset(scorer, example_set(), second, "m", "d")
        assert first.getvalue() == second.getvalue()

    def test_empty_dataset_header_only(self, causal_model, tokenizer):
        scorer = Scorer(causal_model, tokenizer, ScoringMode.CAUSAL)
        out = io.StringIO()
        stats = dump_dataset(scorer, [], out, "m", "d")
        assert stats.written == 0
        assert len(out.getvalue().splitlines()) == 1


class TestLoadExamples:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "data.jsonl"
        rows = [
            {"id": "a", "reference": "the cat", "target": "sat", "label": "entailed"},
            {"reference": "a dog", "target": "ran"},
        ]
        path.write_text("".join(json.dumps(r) + "\n" for r in rows))
        examples = load_examples(str(path))
        assert examples[0].id == "a" and examples[0].label == "entailed"
        assert examples[1].id == "ex-000001" and examples[1].label == "unlabeled"

    def test_errors_carry_location(self, tmp_path):
        from halluadapter import DatasetError

        path = tmp_path / "bad.jsonl"
        path.write_text('{"reference": "x"}\n')
        with pytest.raises(DatasetError, match="target"):
            load_examples(str(path))


@pytest.mark.skipif(
    shutil.which("hallustat") is None,
    reason="statistics engine CLI not installed",
)
class TestEngineIntegration:
    def test_dumped_file_analyzes_through_engine_cli(
        self, causal_model, tokenizer, tmp_path
    ):
        scorer = Scorer(causal_model, tokenizer, ScoringMode.CAUSAL)
        examples = []
        for i in range(12):
            examples.append(
                Example(f"h{i}", "the cat sat on the mat", "a dog ran home",
                        "hallucinated")
            )
            examples.append(
                Example(f"e{i}", "the cat sat on the mat", "the cat sat",
                        "entailed")
            )
        record_path = tmp_path / "cell.jsonl"
        with open(record_path, "w", encoding="utf-8") as fh:
            dump_dataset(scorer, examples, fh, "tiny-causal", "demo")
        proc = subprocess.run(
            ["hallustat", "analyze", str(record_path), "--format", "jsonl"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        rows = [json.loads(line) for line in proc.stdout.splitlines()]
        assert {row["metric"] for row in rows} == {"entropy", "logprob"}
        assert all(row["model"] == "tiny-causal" for row in rows)
        assert all(row["n_hall"] == 12 and row["n_ent"] == 12 for row in rows)
