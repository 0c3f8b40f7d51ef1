import math

import pytest
import torch

from halluadapter import (
    EmptyTargetError,
    ModeMismatchError,
    Scorer,
    ScoringMode,
    scores_from_logits,
)


class TestScoresFromLogits:
    def test_certain_prediction_scores_zero_zero(self):
        # one dominant logit: gold probability 1, entropy 0, both exactly
        logits = torch.full((32,), -1e9)
        logits[7] = 1e9
        assert scores_from_logits(logits, 7) == (0.0, 0.0)

    def test_uniform_prediction(self):
        logits = torch.zeros(16)
        logp, entropy = scores_from_logits(logits, 3)
        assert logp == pytest.approx(math.log(1 / 16), rel=1e-12)
        assert entropy == pytest.approx(math.log(16), rel=1e-12)

    def test_matches_float64_reference(self):
        torch.manual_seed(0)
        logits = torch.randn(50)
        logp, entropy = scores_from_logits(logits, 11)
        ref = torch.log_softmax(logits.double(), dim=-1)
        probs = ref.exp()
        assert logp == pytest.approx(float(ref[11]), abs=1e-15)
        assert entropy == pytest.approx(float(-(probs * ref).sum()), abs=1e-12)

    def test_bounds(self):
        torch.manual_seed(3)
        for _ in range(20):
            logits = torch.randn(40) * 10
            logp, entropy = scores_from_logits(logits, 5)
            assert logp <= 0.0
            assert 0.0 <= entropy <= math.log(40) + 1e-12


class TestScorerModes:
    def test_causal_scores_every_target_token(self, causal_model, tokenizer):
        scorer = Scorer(causal_model, tokenizer, ScoringMode.CAUSAL)
        scores = scorer.score_example("the cat sat", "on the mat")
        assert len(scores) == 3
        for logp, entropy in scores:
            assert logp <= 0.0
            assert 0.0 <= entropy <= math.log(len(tokenizer))

    def test_masked_one_forward_row_per_position(self, masked_model, tokenizer):
        scorer = Scorer(masked_model, tokenizer, ScoringMode.MASKED, batch_size=1)
        scores = scorer.score_example("the cat sat", "on the mat rug")
        assert len(scores) == 4
        assert scorer.forward_rows == 4

    def test_masked_batching_matches_unbatched(self, masked_model, tokenizer):
        one = Scorer(masked_model, tokenizer, ScoringMode.MASKED, batch_size=1)
        many = Scorer(masked_model, tokenizer, ScoringMode.MASKED, batch_size=8)
        a = one.score_example("the cat", "sat on the mat")
        b = many.score_example("the cat", "sat on the mat")
        for (lp1, e1), (lp2, e2) in zip(a, b):
            assert lp1 == pytest.approx(lp2, abs=1e-9)
            assert e1 == pytest.approx(e2, abs=1e-9)

    def test_encdec_scores_target(self, encdec_model, tokenizer):
        scorer = Scorer(encdec_model, tokenizer, ScoringMode.ENCDEC)
        scores = scorer.score_example("the cat sat on the mat", "a dog ran")
        assert len(scores) == 3
        for logp, entropy in scores:
            assert logp <= 0.0
            assert entropy >= 0.0

    def test_deterministic_across_calls(self, causal_model, tokenizer):
        scorer = Scorer(causal_model, tokenizer, ScoringMode.CAUSAL)
        first = scorer.score_example("the cat sat", "on the mat")
        second = scorer.score_example("the cat sat", "on the mat")
        assert first == second

    def test_empty_target_raises_skippable_error(self, causal_model, tokenizer):
        scorer = Scorer(causal_model, tokenizer, ScoringMode.CAUSAL)
        with pytest.raises(EmptyTargetError):
            scorer.score_example("the cat sat", "")

    def test_long_context_truncated_from_left(self, causal_model, tokenizer):
        scorer = Scorer(causal_model, tokenizer, ScoringMode.CAUSAL, max_length=16)
        long_reference = " ".join(["the cat sat on the mat"] * 20)
        scores = scorer.score_example(long_reference, "a dog ran")
        assert len(scores) == 3

    def test_mode_model_mismatch(self, causal_model, encdec_model, tokenizer):
        with pytest.raises(ModeMismatchError):
            Scorer(encdec_model, tokenizer, ScoringMode.CAUSAL)
        with pytest.raises(ModeMismatchError):
            Scorer(causal_model, tokenizer, ScoringMode.ENCDEC)

    def test_masked_needs_mask_token(self, masked_model, tokenizer):
        import copy

        no_mask = copy.deepcopy(tokenizer)
        no_mask.mask_token = None
        with pytest.raises(ModeMismatchError):
            Scorer(masked_model, no_mask, ScoringMode.MASKED)

    def test_template_must_mention_reference(self, causal_model, tokenizer):
        from halluadapter import ScoringError

        with pytest.raises(ScoringError, match="reference"):
            Scorer(causal_model, tokenizer, ScoringMode.CAUSAL, template="fixed: ")

    def test_masked_score_independent_of_replaced_token(self, masked_model, tokenizer):
        # the mask hides y_j, so the predicted distribution at j (and hence
        # the entropy) cannot depend on which token actually sits there
        scorer = Scorer(masked_model, tokenizer, ScoringMode.MASKED)
        a = scorer.score_example("the cat sat", "on the mat")
        b = scorer.score_example("the cat sat", "on the rug")
        # at j=2 both inputs read "... on the [MASK]": identical distribution,
        # identical entropy; only the gold-token lookup differs
        assert a[2][1] == pytest.approx(b[2][1], abs=1e-12)

    def test_causal_prediction_uses_preceding_logits(self, causal_model, tokenizer):
        # manual check on the first target position: the logits row just
        # before the target must produce the same score
        scorer = Scorer(causal_model, tokenizer, ScoringMode.CAUSAL)
        reference, target = "the cat", "sat"
        x_ids = tokenizer("the cat ", add_special_tokens=False)["input_ids"]
        y_ids = tokenizer("sat", add_special_tokens=False)["input_ids"]
        with torch.no_grad():
            logits = causal_model(
                input_ids=torch.tensor([list(x_ids) + list(y_ids)])
            ).logits[0]
        expected = scores_from_logits(logits[len(x_ids) - 1], y_ids[0])
        assert scorer.score_example(reference, target)[0] == expected
