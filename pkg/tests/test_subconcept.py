from __future__ import annotations

import math

import pytest

from analogy_pipeline.corpus import AnalogyRecord, DatasetTag, SubConceptPair
from analogy_pipeline.errors import EvaluationError, GenerationError, MatchingError
from analogy_pipeline.providers.models import ModelRef
from analogy_pipeline.subconcept import (
    MatchingResult,
    generate_source_subconcepts,
    make_matching_task,
    match_subconcepts,
    semantic_match_accuracy,
    semantic_match_hits,
    system_accuracy,
)

from .conftest import scripted_client, vector_embedder

CHAT = ModelRef(provider_id="stub", model_id="stub-chat")
SCORER = ModelRef(provider_id="stub", model_id="stub-scorer")


def single_pair_record():
    return AnalogyRecord(
        id="single",
        dataset_tag=DatasetTag.SCAR,
        target_name="Heart",
        source_name="Pump",
        mappings=(SubConceptPair("valves", "check valves"),),
    )


class TestMatchingTask:
    def test_shuffle_reproducible(self, atom_record):
        a = make_matching_task(atom_record, seed=5)
        b = make_matching_task(atom_record, seed=5)
        assert a == b

    def test_shuffle_preserves_items(self, atom_record):
        task = make_matching_task(atom_record, seed=9)
        assert sorted(task.target_subs) == sorted(atom_record.target_subs)
        assert sorted(task.source_subs) == sorted(atom_record.source_subs)


class TestMatchSubconcepts:
    def test_single_item_forced_pair(self):
        record = single_pair_record()
        task = make_matching_task(record, seed=0)
        client, _ = scripted_client([{"pairs": [("valves", "check valves")]}])
        result = match_subconcepts(client, CHAT, task, record)
        assert result.predicted_pairs == (SubConceptPair("valves", "check valves"),)

    def test_gold_permutation(self, atom_record):
        task = make_matching_task(atom_record, seed=1)
        client, _ = scripted_client(
            [
                {
                    "pairs": [
                        ("nucleus", "sun"),
                        ("electrons", "planets"),
                        ("energy levels", "orbital distances"),
                    ]
                }
            ]
        )
        result = match_subconcepts(client, CHAT, task, atom_record)
        assert set(result.predicted_pairs) == set(atom_record.mappings)

    def test_double_pairing_reprompted_then_fails(self, atom_record):
        task = make_matching_task(atom_record, seed=1)
        bad = {
            "pairs": [
                ("nucleus", "sun"),
                ("nucleus", "planets"),
                ("energy levels", "orbital distances"),
            ]
        }
        client, provider = scripted_client([bad, bad])
        with pytest.raises(MatchingError, match="paired twice"):
            match_subconcepts(client, CHAT, task, atom_record)
        assert provider.call_count == 2

    def test_recovers_after_one_invalid_answer(self, atom_record):
        task = make_matching_task(atom_record, seed=1)
        bad = {"pairs": [("nucleus", "sun"), ("nucleus", "planets"), ("electrons", "sun")]}
        good = {
            "pairs": [
                ("nucleus", "sun"),
                ("electrons", "planets"),
                ("energy levels", "orbital distances"),
            ]
        }
        client, provider = scripted_client([bad, good])
        result = match_subconcepts(client, CHAT, task, atom_record)
        assert provider.call_count == 2
        assert len(result.predicted_pairs) == 3

    def test_hallucinated_item_rejected(self, atom_record):
        task = make_matching_task(atom_record, seed=1)
        bad = {
            "pairs": [
                ("nucleus", "sun"),
                ("electrons", "planets"),
                ("protons", "orbital distances"),
            ]
        }
        client, _ = scripted_client([bad, bad])
        with pytest.raises(MatchingError, match="not one of the given"):
            match_subconcepts(client, CHAT, task, atom_record)

    def test_background_requires_backgrounds(self):
        record = single_pair_record()
        task = make_matching_task(record, with_background=True, seed=0)
        client, _ = scripted_client([])
        with pytest.raises(ValueError, match="background"):
            match_subconcepts(client, CHAT, task, record)

    def test_reasoning_prompt_style(self, atom_record):
        task = make_matching_task(atom_record, seed=1)
        pairing = [(p.target_sub, p.source_sub) for p in atom_record.mappings]
        client, provider = scripted_client([{"pairs": pairing}])
        result = match_subconcepts(
            client, CHAT, task, atom_record, prompt_style="reasoning"
        )
        assert len(result.predicted_pairs) == 3
        assert "step by step" in provider.prompts[0]
        with pytest.raises(ValueError, match="prompt style"):
            match_subconcepts(client, CHAT, task, atom_record, prompt_style="florid")


def result_from_pairs(pairs):
    return MatchingResult(
        predicted_pairs=tuple(SubConceptPair(t, s) for t, s in pairs),
        raw_transcript="",
    )


GOLD = [SubConceptPair("a", "x"), SubConceptPair("b", "y"), SubConceptPair("c", "z")]


class TestSystemAccuracy:
    def test_all_correct(self):
        results = [(result_from_pairs([("a", "x"), ("b", "y"), ("c", "z")]), GOLD)] * 3
        assert system_accuracy(results) == 1.0

    def test_one_of_four_has_swapped_pair(self):
        good = result_from_pairs([("a", "x"), ("b", "y"), ("c", "z")])
        bad = result_from_pairs([("a", "y"), ("b", "x"), ("c", "z")])
        results = [(good, GOLD), (good, GOLD), (good, GOLD), (bad, GOLD)]
        assert system_accuracy(results) == 0.75

    def test_single_wrong_pair_zeroes_record(self):
        bad = result_from_pairs([("a", "y"), ("b", "x"), ("c", "z")])
        assert system_accuracy([(bad, GOLD)]) == 0.0

    def test_comparison_case_insensitive_order_insensitive(self):
        shuffled = result_from_pairs([("C", " Z"), ("A", "X "), ("b", "y")])
        assert system_accuracy([(shuffled, GOLD)]) == 1.0

    def test_item_set_mismatch(self):
        other = result_from_pairs([("a", "x"), ("b", "y"), ("q", "z")])
        with pytest.raises(EvaluationError):
            system_accuracy([(other, GOLD)])

    def test_shuffle_invariance(self, atom_record):
        # the same accepted pairing scores identically however the task was shuffled
        pairing = [(p.target_sub, p.source_sub) for p in atom_record.mappings]
        for seed in range(5):
            task = make_matching_task(atom_record, seed=seed)
            client, _ = scripted_client([{"pairs": pairing}])
            result = match_subconcepts(client, CHAT, task, atom_record)
            assert system_accuracy([(result, list(atom_record.mappings))]) == 1.0


class TestGenerateSourceSubconcepts:
    def test_aligned_output(self, atom_record):
        client, _ = scripted_client(
            [{"source_subconcepts": ["sun", "planets", "orbital distances"]}]
        )
        generated = generate_source_subconcepts(client, CHAT, atom_record)
        assert generated == ["sun", "planets", "orbital distances"]

    def test_single_target_single_output(self):
        record = single_pair_record()
        client, _ = scripted_client([{"source_subconcepts": ["check valves"]}])
        assert generate_source_subconcepts(client, CHAT, record) == ["check valves"]

    def test_wrong_count_twice_fails(self, atom_record):
        short = {"source_subconcepts": ["sun", "planets"]}
        client, provider = scripted_client([short, short])
        with pytest.raises(GenerationError, match="source sub-concepts"):
            generate_source_subconcepts(client, CHAT, atom_record)
        assert provider.call_count == 2

    def test_wrong_count_then_correct(self, atom_record):
        short = {"source_subconcepts": ["sun"]}
        good = {"source_subconcepts": ["sun", "planets", "orbital distances"]}
        client, _ = scripted_client([short, good])
        assert len(generate_source_subconcepts(client, CHAT, atom_record)) == 3

    def test_source_name_override_changes_prompt(self, atom_record):
        client, provider = scripted_client(
            [{"source_subconcepts": ["a", "b", "c"]}]
        )
        generate_source_subconcepts(client, CHAT, atom_record, source_name="Orchestra")
        assert "Orchestra" in provider.prompts[0]


def sim_vector(c: float) -> list[float]:
    return [c, math.sqrt(max(0.0, 1.0 - c * c))]


class TestSemanticMatchAccuracy:
    def test_identity_inputs(self, token_embedder):
        texts = ["sun", "planets", "orbital distances"]
        assert semantic_match_accuracy(texts, list(texts), token_embedder, SCORER) == 1.0

    def test_orthogonal_stub_zero(self, basis_embedder):
        predicted = ["alpha", "beta"]
        gold = ["gamma", "delta"]
        assert semantic_match_accuracy(predicted, gold, basis_embedder, SCORER) == 0.0

    def test_threshold_boundary_three_of_five(self):
        cosines = [0.9, 0.71, 0.7, 0.69, 0.2]
        mapping = {"g": [1.0, 0.0]}
        predicted, gold = [], []
        for i, c in enumerate(cosines):
            mapping[f"p{i}"] = sim_vector(c)
            predicted.append(f"p{i}")
            gold.append("g")
        client = vector_embedder(mapping)
        assert semantic_match_accuracy(predicted, gold, client, SCORER) == pytest.approx(0.6)
        hits, total = semantic_match_hits(predicted, gold, client, SCORER)
        assert (hits, total) == (3, 5)

    def test_monotone_in_threshold(self):
        cosines = [0.9, 0.71, 0.7, 0.69, 0.2]
        mapping = {"g": [1.0, 0.0]}
        predicted, gold = [], []
        for i, c in enumerate(cosines):
            mapping[f"p{i}"] = sim_vector(c)
            predicted.append(f"p{i}")
            gold.append("g")
        client = vector_embedder(mapping)
        values = [
            semantic_match_accuracy(predicted, gold, client, SCORER, threshold=t)
            for t in (0.1, 0.3, 0.5, 0.7, 0.9)
        ]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_length_mismatch(self, token_embedder):
        with pytest.raises(ValueError, match="lengths differ"):
            semantic_match_accuracy(["a"], ["a", "b"], token_embedder, SCORER)

    def test_empty_rejected(self, token_embedder):
        with pytest.raises(ValueError):
            semantic_match_accuracy([], [], token_embedder, SCORER)
