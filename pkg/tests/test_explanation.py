from __future__ import annotations

import numpy as np
import pytest

from analogy_pipeline.corpus import AnalogyRecord, DatasetTag
from analogy_pipeline.errors import GenerationError
from analogy_pipeline.explanation import (
    ExplanationConfig,
    ExplanationOutput,
    explanation_signature,
    generate_explanation,
    render_explanation_inputs,
    score_explanation,
    score_explanation_pairwise,
)
from analogy_pipeline.providers.models import ModelRef

from .conftest import scripted_client, vector_embedder

CHAT = ModelRef(provider_id="stub", model_id="stub-chat")
SCORER = ModelRef(provider_id="stub", model_id="stub-scorer")


def bare_record():
    return AnalogyRecord(
        id="bare",
        dataset_tag=DatasetTag.CUSTOM,
        target_name="Tides",
        source_name="Breathing",
    )


class TestRenderInputs:
    def test_s1_names_only(self, atom_record):
        inputs = render_explanation_inputs(atom_record, ExplanationConfig.S1_NAMES)
        assert inputs == {"target": "Atom", "source": "Solar system"}

    def test_s5_pairs(self, atom_record):
        inputs = render_explanation_inputs(atom_record, ExplanationConfig.S5_PAIRS)
        assert set(inputs) == {"target", "source", "pairs"}
        assert inputs["pairs"][0] == ("nucleus", "sun")

    def test_s2_missing_background_is_error(self):
        with pytest.raises(ValueError, match="S2_NAMES_DESC"):
            render_explanation_inputs(bare_record(), ExplanationConfig.S2_NAMES_DESC)

    def test_s3_missing_mappings_is_error(self):
        with pytest.raises(ValueError, match="requires mappings"):
            render_explanation_inputs(bare_record(), ExplanationConfig.S3_SUBS)

    def test_s3_shuffle_seed_reproducible(self, atom_record):
        a = render_explanation_inputs(atom_record, ExplanationConfig.S3_SUBS, seed=4)
        b = render_explanation_inputs(atom_record, ExplanationConfig.S3_SUBS, seed=4)
        c = render_explanation_inputs(atom_record, ExplanationConfig.S3_SUBS, seed=5)
        assert a == b
        assert sorted(a["target_sub"]) == sorted(c["target_sub"])

    def test_s3_shuffles_independently(self, atom_record):
        inputs = render_explanation_inputs(atom_record, ExplanationConfig.S3_SUBS, seed=1)
        assert sorted(inputs["target_sub"]) == sorted(atom_record.target_subs)
        assert sorted(inputs["source_sub"]) == sorted(atom_record.source_subs)

    def test_s6_includes_descriptions_and_pairs(self, atom_record):
        inputs = render_explanation_inputs(atom_record, ExplanationConfig.S6_PAIRS_DESC)
        assert set(inputs) == {"target", "target_desc", "source", "source_desc", "pairs"}


class TestSignatureShapes:
    def test_s1_single_text_output(self):
        sig = explanation_signature(ExplanationConfig.S1_NAMES)
        assert sig.outputs[0].shape == "text"

    def test_s5_list_output(self):
        sig = explanation_signature(ExplanationConfig.S5_PAIRS)
        assert sig.outputs[0].shape == "list-of-text"


class TestGenerateExplanation:
    def test_s1_single_paragraph(self, atom_record):
        client, _ = scripted_client(
            [{"explanation": "An atom's electrons orbit the nucleus like planets orbit the sun."}]
        )
        output = generate_explanation(client, CHAT, atom_record, ExplanationConfig.S1_NAMES)
        assert len(output.texts) == 1
        assert output.config is ExplanationConfig.S1_NAMES

    def test_s5_one_text_per_pair(self, atom_record):
        client, _ = scripted_client(
            [{"explanation": ["first pair text", "second pair text", "third pair text"]}]
        )
        output = generate_explanation(client, CHAT, atom_record, ExplanationConfig.S5_PAIRS)
        assert len(output.texts) == 3

    def test_s5_wrong_arity_twice_fails(self, atom_record):
        short = {"explanation": ["only", "two"]}
        client, provider = scripted_client([short, short])
        with pytest.raises(GenerationError):
            generate_explanation(client, CHAT, atom_record, ExplanationConfig.S5_PAIRS)
        assert provider.call_count == 2

    def test_s5_wrong_arity_then_fixed(self, atom_record):
        client, _ = scripted_client(
            [{"explanation": ["a"]}, {"explanation": ["a", "b", "c"]}]
        )
        output = generate_explanation(client, CHAT, atom_record, ExplanationConfig.S5_PAIRS)
        assert len(output.texts) == 3


class TestScoreExplanation:
    def test_gold_as_output_scores_one(self, atom_record, token_embedder):
        gold = list(atom_record.gold_explanations)
        output = ExplanationOutput(
            record_id=atom_record.id,
            config=ExplanationConfig.S5_PAIRS,
            texts=tuple(gold),
            raw_transcript="",
        )
        assert score_explanation(output, gold, token_embedder, SCORER) == pytest.approx(1.0)

    def test_orthogonal_scorer_zero(self, basis_embedder):
        output = ExplanationOutput(
            record_id="x",
            config=ExplanationConfig.S1_NAMES,
            texts=("completely different",),
            raw_transcript="",
        )
        score = score_explanation(output, ["reference text"], basis_embedder, SCORER)
        assert score == 0.0

    def test_mean_over_records_matches_hand_computation(self):
        rng = np.random.default_rng(13)
        mapping = {}
        outputs, golds = [], []
        for i in range(4):
            gen, ref = f"generated {i}", f"reference {i}"
            for text in (gen, ref):
                v = rng.standard_normal(5)
                mapping[text] = (v / np.linalg.norm(v)).tolist()
            outputs.append(
                ExplanationOutput(
                    record_id=f"r{i}",
                    config=ExplanationConfig.S1_NAMES,
                    texts=(gen,),
                    raw_transcript="",
                )
            )
            golds.append([ref])
        client = vector_embedder(mapping)
        scores = [
            score_explanation(o, g, client, SCORER) for o, g in zip(outputs, golds)
        ]
        expected = [
            float(np.dot(mapping[f"generated {i}"], mapping[f"reference {i}"]))
            for i in range(4)
        ]
        assert np.mean(scores) == pytest.approx(np.mean(expected), abs=1e-12)

    def test_pairwise_diagnostic(self, token_embedder, atom_record):
        gold = list(atom_record.gold_explanations)
        output = ExplanationOutput(
            record_id=atom_record.id,
            config=ExplanationConfig.S5_PAIRS,
            texts=tuple(gold),
            raw_transcript="",
        )
        assert score_explanation_pairwise(output, gold, token_embedder, SCORER) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            score_explanation_pairwise(output, gold[:2], token_embedder, SCORER)

    def test_empty_gold_rejected(self, token_embedder):
        output = ExplanationOutput(
            record_id="x", config=ExplanationConfig.S1_NAMES, texts=("t",), raw_transcript=""
        )
        with pytest.raises(ValueError):
            score_explanation(output, [], token_embedder, SCORER)
