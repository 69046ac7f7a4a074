from __future__ import annotations

import numpy as np
import pytest

from analogy_pipeline.errors import JudgeError
from analogy_pipeline.judge import (
    RUBRIC_SHA256,
    JudgeVerdict,
    aggregate_verdicts,
    judge_analogy,
    judge_signature,
    parse_verdict_scores,
    rubric_sha256,
    rubric_text,
)
from analogy_pipeline.providers.models import ModelRef

from .conftest import scripted_client

JUDGE = ModelRef(provider_id="stub", model_id="stub-judge")


def verdict_fields(c, m, e):
    return {
        "coherence_reasoning": "clear connection",
        "coherence_score": str(c),
        "mapping_reasoning": "solid correspondences",
        "mapping_score": str(m),
        "explanatory_reasoning": "helps the learner",
        "explanatory_score": str(e),
    }


class TestRubricAsset:
    def test_digest_pinned(self):
        assert rubric_sha256() == RUBRIC_SHA256

    def test_contains_all_calibration_examples(self):
        text = rubric_text()
        for i in range(1, 11):
            assert f"Example {i} (scores:" in text

    def test_contains_first_calibration_pair(self):
        text = rubric_text()
        assert 'target: "electric circuit"  |  analogy: "water flowing through pipes"' in text
        assert "Example 1 (scores: 3 / 3 / 3)" in text

    def test_signature_embeds_rubric(self):
        sig = judge_signature()
        assert "ANALOGY_COHERENCE" in sig.instruction
        assert "MAPPING_SOUNDNESS" in sig.instruction
        assert "EXPLANATORY_POWER" in sig.instruction


class TestJudgeAnalogy:
    def test_scripted_full_marks(self):
        client, _ = scripted_client([verdict_fields(3, 3, 3)])
        verdict = judge_analogy(
            client,
            JUDGE,
            target="electric circuit",
            source="water flowing through pipes",
            explanation="Voltage pushes current the way pressure pushes water.",
            record_id="calib-1",
        )
        assert (verdict.coherence, verdict.mapping, verdict.explanatory) == (3, 3, 3)
        assert verdict.avg_score == pytest.approx(3.0)
        assert verdict.judge_model_id == "stub-judge"

    def test_out_of_range_twice_is_judge_error(self):
        client, provider = scripted_client([verdict_fields(4, 3, 3), verdict_fields(4, 3, 3)])
        with pytest.raises(JudgeError, match="out-of-range"):
            judge_analogy(client, JUDGE, "t", "s", "e")
        assert provider.call_count == 2

    def test_out_of_range_then_valid(self):
        client, _ = scripted_client([verdict_fields(0, 2, 2), verdict_fields(2, 2, 2)])
        verdict = judge_analogy(client, JUDGE, "t", "s", "e")
        assert verdict.coherence == 2

    def test_empty_text_precondition(self):
        client, _ = scripted_client([])
        with pytest.raises(ValueError, match="non-empty"):
            judge_analogy(client, JUDGE, "t", " ", "e")

    def test_judge_distinct_from_generator(self):
        client, _ = scripted_client([])
        with pytest.raises(ValueError, match="differ from the generator"):
            judge_analogy(client, JUDGE, "t", "s", "e", generator_model_id="stub-judge")

    def test_reasoning_then_score_layout(self):
        raw = (
            "ANALOGY_COHERENCE: the pairing is natural and immediate.\n"
            "Score: 3\n\n"
            "MAPPING_SOUNDNESS reasoning first, it covers the main parts.\n"
            "score = 2\n\n"
            "EXPLANATORY_POWER\n"
            "A learner can reason with this.\n"
            "2\n"
        )
        client, _ = scripted_client([raw])
        verdict = judge_analogy(client, JUDGE, "t", "s", "e")
        assert (verdict.coherence, verdict.mapping, verdict.explanatory) == (3, 2, 2)

    def test_unscorable_text_twice_fails(self):
        client, _ = scripted_client(["no scores here", "still nothing"])
        with pytest.raises(JudgeError):
            judge_analogy(client, JUDGE, "t", "s", "e")


class TestParseVerdictScores:
    def test_label_equals_layout(self):
        raw = "coherence=3: fine\nmapping=1: weak\nexplanatory=2: partial"
        parsed = parse_verdict_scores(raw)
        assert {d: s for d, (s, _) in parsed.items()} == {
            "coherence": 3,
            "mapping": 1,
            "explanatory": 2,
        }

    def test_missing_dimension_returns_none(self):
        assert parse_verdict_scores("coherence: 3\nmapping: 2") is None

    def test_rationales_captured(self):
        raw = "coherence: 3 because it is obvious\nmapping: 2 partial\nexplanatory: 1 none"
        parsed = parse_verdict_scores(raw)
        assert "obvious" in parsed["coherence"][1]


def verdict(rid, c, m, e):
    return JudgeVerdict(
        record_id=rid,
        coherence=c,
        mapping=m,
        explanatory=e,
        rationales=("", "", ""),
        judge_model_id="stub-judge",
        raw_transcript="",
    )


class TestVerdictInvariants:
    def test_scores_must_be_in_scale(self):
        with pytest.raises(ValueError):
            verdict("r", 0, 2, 2)
        with pytest.raises(ValueError):
            verdict("r", 1, 4, 2)


class TestAggregateVerdicts:
    def test_single_verdict(self):
        aggregates = aggregate_verdicts([verdict("r1", 3, 2, 1)], {"r1": "g"})
        agg = aggregates[0]
        assert agg.n == 1
        assert agg.means["avg_score"] == pytest.approx(2.0)
        assert agg.stds["avg_score"] == 0.0

    def test_matches_brute_force(self):
        data = [("r1", 3, 2, 1), ("r2", 2, 2, 2), ("r3", 1, 3, 2), ("r4", 3, 3, 3)]
        verdicts = [verdict(*row) for row in data]
        grouping = {f"r{i}": "all" for i in range(1, 5)}
        agg = aggregate_verdicts(verdicts, grouping)[0]
        for dim_index, dim in enumerate(("coherence", "mapping", "explanatory")):
            column = np.array([row[dim_index + 1] for row in data], dtype=float)
            assert agg.means[dim] == pytest.approx(column.mean(), abs=1e-9)
            assert agg.stds[dim] == pytest.approx(column.std(), abs=1e-9)
        avgs = np.array([(c + m + e) / 3 for _, c, m, e in data])
        assert agg.means["avg_score"] == pytest.approx(avgs.mean(), abs=1e-9)
        assert agg.stds["avg_score"] == pytest.approx(avgs.std(), abs=1e-9)

    def test_sample_std_switch(self):
        verdicts = [verdict("r1", 1, 1, 1), verdict("r2", 3, 3, 3)]
        grouping = {"r1": "g", "r2": "g"}
        pop = aggregate_verdicts(verdicts, grouping)[0]
        samp = aggregate_verdicts(verdicts, grouping, sample_std=True)[0]
        assert samp.stds["coherence"] > pop.stds["coherence"]

    def test_permutation_invariant(self):
        verdicts = [verdict(f"r{i}", 1 + i % 3, 1 + (i + 1) % 3, 1 + (i + 2) % 3) for i in range(9)]
        grouping = {f"r{i}": f"g{i % 2}" for i in range(9)}
        forward = aggregate_verdicts(verdicts, grouping)
        backward = aggregate_verdicts(list(reversed(verdicts)), grouping)
        assert forward == backward

    def test_grouped_means(self):
        verdicts = [verdict("r1", 3, 3, 3), verdict("r2", 1, 1, 1)]
        grouping = {"r1": "a", "r2": "b"}
        aggregates = aggregate_verdicts(verdicts, grouping)
        assert [a.group_key for a in aggregates] == ["a", "b"]
        assert aggregates[0].means["avg_score"] == 3.0
        assert aggregates[1].means["avg_score"] == 1.0

    def test_avg_score_within_scale(self):
        rng = np.random.default_rng(2)
        verdicts = [
            verdict(f"r{i}", *(int(v) for v in rng.integers(1, 4, size=3)))
            for i in range(30)
        ]
        grouping = {f"r{i}": "g" for i in range(30)}
        agg = aggregate_verdicts(verdicts, grouping)[0]
        assert 1.0 <= agg.means["avg_score"] <= 3.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate_verdicts([], {})

    def test_missing_group_rejected(self):
        with pytest.raises(ValueError, match="no group"):
            aggregate_verdicts([verdict("r1", 1, 2, 3)], {})
