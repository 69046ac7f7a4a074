from __future__ import annotations

import json

import pytest

from analogy_pipeline.corpus import AnalogyRecord, DatasetTag, SubConceptPair
from analogy_pipeline.providers.chat import ChatClient, ScriptedChatProvider
from analogy_pipeline.providers.embedding import (
    EmbeddingClient,
    OrthonormalStubEmbedding,
    ScriptedEmbeddingProvider,
    TokenHashEmbeddingProvider,
)
from analogy_pipeline.providers.models import ModelRef

SCAR_ROWS = [
    {
        "id": 3,
        "lang": "en",
        "system_a": "Respiratory system",
        "system_b": "Engine",
        "mappings": [
            ["oxygen", "fuel"],
            ["lungs", "combustion chamber"],
            ["breathing muscles", "piston"],
        ],
        "system_a_domain": "Biology",
        "system_b_domain": "Physics",
        "system_a_background": "The respiratory system moves air in and out of the body.",
        "system_b_background": "An engine converts fuel into motion.",
        "Explanation": [
            "Oxygen corresponds to fuel: both are consumed to release energy.",
            "Lungs correspond to the combustion chamber: both are where the reaction happens.",
            "Breathing muscles correspond to the piston: both drive the cycle mechanically.",
        ],
    },
    {
        "id": 7,
        "lang": "en",
        "system_a": "Atom",
        "system_b": "Solar system",
        "mappings": [
            ["nucleus", "sun"],
            ["electrons", "planets"],
            ["energy levels", "orbital distances"],
        ],
        "system_a_domain": "Physics",
        "system_b_domain": "Astronomy",
        "system_a_background": "An atom is the smallest unit of ordinary matter.",
        "system_b_background": "The solar system is the sun and the bodies orbiting it.",
        "Explanation": [
            "The nucleus corresponds to the sun: both sit at the center.",
            "Electrons correspond to planets: both move around the center.",
            "Energy levels correspond to orbital distances: both are discrete separations.",
        ],
    },
]

PARC_ROWS = [
    {
        "sample_id": 1,
        "source_subject": "What causes a volcano to erupt?",
        "source_domain": "Natural Sciences",
        "target_domain": "Engineering",
        "target_subject": "What causes a boiler to explode?",
        "target_field": "Chemical Engineering",
        "relations": [
            "(magma, heats, underground water) like (steam, heats, liquid)",
            "(pressure, builds, inside the volcano) like (pressure, builds, inside the boiler)",
            "(magma, pushes, against the walls of the volcano) like (steam, pushes, against the walls of the boiler)",
        ],
        "source_paragraph": "When magma heats up underground water, pressure builds inside the volcano.",
        "target_paragraph": "Steam heats the liquid inside the boiler until it can no longer contain the pressure.",
        "analogy_type": "far analogy",
        "sum_vote_analogy": 3.0,
    }
]


@pytest.fixture
def scar_file(tmp_path):
    path = tmp_path / "scar.json"
    path.write_text(json.dumps(SCAR_ROWS), encoding="utf-8")
    return path


@pytest.fixture
def parc_file(tmp_path):
    path = tmp_path / "parc.json"
    path.write_text(json.dumps(PARC_ROWS), encoding="utf-8")
    return path


@pytest.fixture
def atom_record():
    return AnalogyRecord(
        id="atom-1",
        dataset_tag=DatasetTag.SCAR,
        target_name="Atom",
        source_name="Solar system",
        target_background="An atom is the smallest unit of ordinary matter.",
        source_background="The solar system is the sun and the bodies orbiting it.",
        mappings=(
            SubConceptPair("nucleus", "sun"),
            SubConceptPair("electrons", "planets"),
            SubConceptPair("energy levels", "orbital distances"),
        ),
        gold_explanations=(
            "The nucleus corresponds to the sun: both sit at the center.",
            "Electrons correspond to planets: both move around the center.",
            "Energy levels correspond to orbital distances: both are discrete separations.",
        ),
    )


@pytest.fixture
def chat_model():
    return ModelRef(provider_id="stub", model_id="stub-chat")


@pytest.fixture
def embed_model():
    return ModelRef(provider_id="stub", model_id="stub-embed")


def scripted_client(script, cache=None, **kwargs) -> tuple[ChatClient, ScriptedChatProvider]:
    provider = ScriptedChatProvider(script)
    client = ChatClient(provider, cache=cache, backoff_base=0.0, **kwargs)
    return client, provider


@pytest.fixture
def basis_embedder():
    return EmbeddingClient(OrthonormalStubEmbedding(dim=64))


@pytest.fixture
def token_embedder():
    return EmbeddingClient(TokenHashEmbeddingProvider(dim=128))


def vector_embedder(mapping: dict[str, list[float]]) -> EmbeddingClient:
    return EmbeddingClient(ScriptedEmbeddingProvider(mapping))
