from __future__ import annotations

import json
import re

import pytest
from fastapi.testclient import TestClient

from analogy_pipeline.annotation.export import submissions_from_csv
from analogy_pipeline.annotation.service import create_app
from analogy_pipeline.annotation.tasks import default_tasks


@pytest.fixture
def app_client(tmp_path):
    app = create_app(journal_path=tmp_path / "journal.jsonl")
    with TestClient(app) as client:
        yield client


def make_submission(annotator, task_id, scores=None, ranking=None, confidence=4):
    return {
        "annotator_id": annotator,
        "task_id": task_id,
        "scores": scores
        or [
            {"coherence": 3, "mapping": 2, "explanatory": 3},
            {"coherence": 2, "mapping": 2, "explanatory": 1},
            {"coherence": 1, "mapping": 1, "explanatory": 2},
        ],
        "ranking": ranking or [1, 2, 3],
        "confidence": confidence,
    }


def register(client) -> str:
    response = client.post("/annotators")
    assert response.status_code == 201
    return response.json()["annotator_id"]


def complete_all_tasks(client, annotator, task_ids):
    for task_id in task_ids:
        response = client.post("/submissions", json=make_submission(annotator, task_id))
        assert response.status_code == 201


class TestRegistration:
    def test_issued_id_shape(self, app_client):
        annotator = register(app_client)
        assert re.fullmatch(r"ANN-[A-Z0-9]{6}", annotator)

    def test_fresh_annotator_sees_fifteen_tasks(self, app_client):
        annotator = register(app_client)
        response = app_client.get("/tasks", params={"annotator": annotator})
        tasks = response.json()
        assert len(tasks) == 15
        assert all(not t["completed"] for t in tasks)
        assert all(len(t["candidates"]) == 3 for t in tasks)

    def test_unknown_annotator_rejected(self, app_client):
        response = app_client.get("/tasks", params={"annotator": "ANN-UNKNWN"})
        assert response.status_code == 401
        assert "registration required" in response.json()["detail"]

    def test_default_study_set_spans_five_plus_domains(self):
        domains = {t.domain for t in default_tasks()}
        assert len(domains) >= 5


class TestSubmission:
    def test_valid_submission_stored_and_flagged(self, app_client):
        annotator = register(app_client)
        task_id = app_client.get("/tasks", params={"annotator": annotator}).json()[0][
            "task_id"
        ]
        response = app_client.post("/submissions", json=make_submission(annotator, task_id))
        assert response.status_code == 201
        assert response.json()["replaced"] is False
        tasks = app_client.get("/tasks", params={"annotator": annotator}).json()
        flags = {t["task_id"]: t["completed"] for t in tasks}
        assert flags[task_id] is True
        assert sum(flags.values()) == 1

    def test_non_permutation_ranking_rejected(self, app_client):
        annotator = register(app_client)
        payload = make_submission(annotator, "cell", ranking=[1, 1, 2])
        response = app_client.post("/submissions", json=payload)
        assert response.status_code == 422
        assert "permutation" in json.dumps(response.json())

    def test_out_of_range_score_rejected(self, app_client):
        annotator = register(app_client)
        payload = make_submission(annotator, "cell")
        payload["scores"][0]["coherence"] = 4
        response = app_client.post("/submissions", json=payload)
        assert response.status_code == 422

    def test_out_of_range_confidence_rejected(self, app_client):
        annotator = register(app_client)
        response = app_client.post(
            "/submissions", json=make_submission(annotator, "cell", confidence=6)
        )
        assert response.status_code == 422

    def test_unknown_task_rejected(self, app_client):
        annotator = register(app_client)
        response = app_client.post("/submissions", json=make_submission(annotator, "nope"))
        assert response.status_code == 404

    def test_unregistered_annotator_rejected(self, app_client):
        response = app_client.post("/submissions", json=make_submission("ANN-GHOSTX", "cell"))
        assert response.status_code == 401

    def test_resubmission_replaces(self, app_client):
        annotator = register(app_client)
        first = make_submission(annotator, "cell")
        second = make_submission(annotator, "cell", ranking=[3, 2, 1])
        assert app_client.post("/submissions", json=first).json()["replaced"] is False
        assert app_client.post("/submissions", json=second).json()["replaced"] is True
        export = app_client.get("/export").json()
        assert export["counts"]["submissions"] == 1
        assert export["rankings"]["cell"]["ranks"] == [[3, 2, 1]]

    def test_idempotent_per_content(self, app_client):
        annotator = register(app_client)
        payload = make_submission(annotator, "cell")
        app_client.post("/submissions", json=payload)
        app_client.post("/submissions", json=payload)
        assert app_client.get("/export").json()["counts"]["submissions"] == 1


class TestExport:
    def test_two_full_annotators_matrix_shape(self, app_client):
        task_ids = [t.task_id for t in default_tasks()]
        for _ in range(2):
            annotator = register(app_client)
            complete_all_tasks(app_client, annotator, task_ids)
        export = app_client.get("/export").json()
        for dim in ("coherence", "mapping", "explanatory"):
            matrix = export["ratings"][dim]
            assert len(matrix["raters"]) == 2
            assert len(matrix["items"]) == 45
            assert all(len(row) == 45 for row in matrix["values"])
            assert all(v is not None for row in matrix["values"] for v in row)
        assert len(export["rankings"]) == 15
        assert export["counts"]["score_datapoints"] == 2 * 15 * 9

    def test_partial_annotator_missing_cells(self, app_client):
        annotator = register(app_client)
        complete_all_tasks(app_client, annotator, ["cell"])
        export = app_client.get("/export").json()
        row = export["ratings"]["coherence"]["values"][0]
        assert sum(v is not None for v in row) == 3
        assert sum(v is None for v in row) == 42

    def test_csv_round_trip(self, app_client):
        task_ids = [t.task_id for t in default_tasks()][:4]
        annotator = register(app_client)
        complete_all_tasks(app_client, annotator, task_ids)
        csv_text = app_client.get("/export", params={"format": "csv"}).text
        rebuilt = submissions_from_csv(csv_text)
        assert len(rebuilt) == 4
        original = app_client.get("/export").json()
        from analogy_pipeline.annotation.export import build_export

        again = build_export(rebuilt, default_tasks())
        assert again["ratings"] == original["ratings"]
        assert again["rankings"] == original["rankings"]

    def test_empty_export_is_error(self, app_client):
        assert app_client.get("/export").status_code == 404

    def test_bad_format_rejected(self, app_client):
        annotator = register(app_client)
        complete_all_tasks(app_client, annotator, ["cell"])
        assert app_client.get("/export", params={"format": "xml"}).status_code == 422


class TestAgreementEndpoint:
    def test_identical_annotators_full_agreement(self, app_client):
        task_ids = [t.task_id for t in default_tasks()]
        for _ in range(2):
            annotator = register(app_client)
            complete_all_tasks(app_client, annotator, task_ids)
        report = app_client.get("/agreement").json()
        assert report["alpha"] == {
            "coherence": 1.0,
            "mapping": 1.0,
            "explanatory": 1.0,
        }
        assert len(report["kendall_w"]) == 15
        for entry in report["kendall_w"].values():
            assert entry["w"] == pytest.approx(1.0)

    def test_platelets_seven_identical_rankings(self, app_client):
        for _ in range(7):
            annotator = register(app_client)
            complete_all_tasks(app_client, annotator, ["platelets"])
        report = app_client.get("/agreement").json()
        entry = report["kendall_w"]["platelets"]
        assert entry["w"] == pytest.approx(1.0)
        assert entry["p_value"] == pytest.approx(0.0009, abs=2e-4)

    def test_agreement_without_data_is_error(self, app_client):
        assert app_client.get("/agreement").status_code == 404


class TestDurability:
    def test_restart_preserves_submissions(self, tmp_path):
        journal = tmp_path / "journal.jsonl"
        with TestClient(create_app(journal_path=journal)) as client:
            annotator = register(client)
            complete_all_tasks(client, annotator, ["cell", "platelets"])
        with TestClient(create_app(journal_path=journal)) as client:
            assert client.get("/health").json()["submissions"] == 2
            tasks = client.get("/tasks", params={"annotator": annotator}).json()
            assert sum(t["completed"] for t in tasks) == 2


class TestJudgeAlignment:
    def test_alignment_block_present(self, tmp_path):
        verdicts = []
        for task in default_tasks():
            for idx in (1, 2, 3):
                verdicts.append(
                    {
                        "task_id": task.task_id,
                        "candidate_index": idx,
                        "coherence": 4 - idx,
                        "mapping": 4 - idx,
                        "explanatory": 4 - idx,
                    }
                )
        verdicts_path = tmp_path / "verdicts.json"
        verdicts_path.write_text(json.dumps(verdicts), encoding="utf-8")
        app = create_app(
            journal_path=tmp_path / "journal.jsonl", judge_verdicts_path=verdicts_path
        )
        with TestClient(app) as client:
            task_ids = [t.task_id for t in default_tasks()]
            for _ in range(2):
                annotator = register(client)
                complete_all_tasks(client, annotator, task_ids)
            report = client.get("/agreement").json()
        alignment = report["judge_alignment"]
        # candidate i gets judge score 4-i, so the judge's implicit ranking is
        # (1, 2, 3), identical to every annotator's submitted ranking
        for stats in alignment["ranking"].values():
            assert stats["rho"] == pytest.approx(1.0)
            assert stats["significant"] is True
        raters_in_linkage = {
            rater for merge in report["linkage"] for rater in merge["left"] + merge["right"]
        }
        assert "judge" in raters_in_linkage

    def test_calibration_endpoint_serves_rubric(self, app_client):
        text = app_client.get("/calibration").json()["text"]
        assert "CALIBRATION EXAMPLES" in text
        assert '"atom"  |  analogy: "solar system"' in text
