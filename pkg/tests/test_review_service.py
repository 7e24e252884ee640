import pytest
from fastapi.testclient import TestClient

from avforge.annotate import ReviewTask, TaskStore
from avforge.review_service import create_app


@pytest.fixture
def store(tmp_path, tone_wav):
    media = tone_wav("show.wav", 6.0)
    store = TaskStore(tmp_path / "store")
    tasks = [
        ReviewTask(
            id=f"show-{i:04d}",
            source_media=str(media),
            start_s=1.0 * i,
            end_s=1.0 * i + 1.2,
            pseudo_transcript=f"pseudo {i}",
        )
        for i in range(3)
    ]
    store.add_tasks(tasks)
    yield store
    store.close()


@pytest.fixture
def client(store):
    return TestClient(create_app(store))


REVIEWER = {"X-Reviewer": "anna"}


def test_empty_store_no_tasks(tmp_path):
    empty = TaskStore(tmp_path / "empty")
    client = TestClient(create_app(empty))
    body = client.get("/api/tasks", params={"status": "pending", "limit": 1}).json()
    assert body["tasks"] == []
    assert body["counts"]["pending"] == 0
    empty.close()


def test_list_pending_with_counts(client):
    body = client.get("/api/tasks", params={"status": "pending"}).json()
    assert [t["id"] for t in body["tasks"]] == ["show-0000", "show-0001", "show-0002"]
    assert body["counts"] == {"pending": 3, "accepted": 0, "rejected": 0, "skipped": 0}


def test_get_single_task(client):
    task = client.get("/api/tasks/show-0001").json()
    assert task["pseudo_transcript"] == "pseudo 1"
    assert task["revision"] == 0


def test_get_unknown_task_404(client):
    assert client.get("/api/tasks/nope").status_code == 404


def test_submit_accept_round_trip(client):
    resp = client.post(
        "/api/tasks/show-0000",
        json={"revision": 0, "verdict": "accept", "final_transcript": "text verificat"},
        headers=REVIEWER,
    )
    assert resp.status_code == 200
    task = resp.json()
    assert task["status"] == "accepted"
    assert task["revision"] == 1
    assert task["reviewer"] == "anna"
    stored = client.get("/api/tasks/show-0000").json()
    assert stored == task


def test_submit_boundary_edit(client):
    resp = client.post(
        "/api/tasks/show-0001",
        json={"revision": 0, "verdict": "accept", "start_s": 1.0, "end_s": 2.1},
        headers=REVIEWER,
    )
    assert resp.status_code == 200
    task = resp.json()
    assert task["start_s"] == 1.0 and task["end_s"] == 2.1
    assert task["final_transcript"] == "pseudo 1"


def test_stale_revision_conflict(client):
    first = client.post(
        "/api/tasks/show-0000", json={"revision": 0, "verdict": "skip"}, headers=REVIEWER
    )
    assert first.status_code == 200
    second = client.post(
        "/api/tasks/show-0000", json={"revision": 0, "verdict": "accept"}, headers=REVIEWER
    )
    assert second.status_code == 409
    assert client.get("/api/tasks/show-0000").json()["status"] == "skipped"


def test_missing_reviewer_header_rejected(client):
    resp = client.post("/api/tasks/show-0000", json={"revision": 0, "verdict": "accept"})
    assert resp.status_code == 400


def test_invalid_verdict_rejected(client):
    resp = client.post(
        "/api/tasks/show-0000", json={"revision": 0, "verdict": "maybe"}, headers=REVIEWER
    )
    assert resp.status_code == 400


def test_invalid_boundaries_rejected(client):
    resp = client.post(
        "/api/tasks/show-0000",
        json={"revision": 0, "verdict": "accept", "start_s": 3.0, "end_s": 1.0},
        headers=REVIEWER,
    )
    assert resp.status_code == 400


def test_mutation_persisted_before_ack(tmp_path, store):
    client = TestClient(create_app(store))
    client.post("/api/tasks/show-0002", json={"revision": 0, "verdict": "accept"}, headers=REVIEWER)
    # a cold process reading the same directory must see the mutation
    replica = TaskStore(store.root)
    assert replica.get("show-0002").status == "accepted"
    replica.close()


def test_media_served_with_range_support(client):
    full = client.get("/media/show-0000")
    assert full.status_code == 200
    assert full.headers["content-type"] == "audio/wav"
    assert len(full.content) > 44  # larger than the bare header

    partial = client.get("/media/show-0000", headers={"Range": "bytes=0-99"})
    assert partial.status_code == 206
    assert len(partial.content) == 100
    assert partial.headers["content-range"].startswith("bytes 0-99/")


def test_media_unknown_task_404(client):
    assert client.get("/media/nope").status_code == 404


def test_media_reflects_boundary_edit(client):
    before = client.get("/media/show-0000").content
    client.post(
        "/api/tasks/show-0000",
        json={"revision": 0, "verdict": "accept", "end_s": 1.6},
        headers=REVIEWER,
    )
    after = client.get("/media/show-0000").content
    assert len(after) > len(before)  # clip regenerated for the new boundaries
