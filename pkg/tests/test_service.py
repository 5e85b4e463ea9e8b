import json
import math

import pytest
from fastapi.testclient import TestClient

from floornav.geometry import serialize_floorplan
from floornav.service import create_app

from .conftest import plan_document


@pytest.fixture()
def client(tmp_path):
    app = create_app(store_root=tmp_path / "store")
    with TestClient(app) as c:
        yield c


def big_room_doc():
    return json.dumps({
        "scene_id": "test-room",
        "floor_id": "0",
        "regions": [{"id": 0, "type": "kitchen",
                     "polygon": [[0, 0], [8, 0], [8, 8], [0, 8]]}],
    })


def upload_plan(client, doc=None):
    r = client.post("/floorplans", content=(doc or big_room_doc()))
    assert r.status_code == 200, r.text
    return r.json()["floorplan_id"]


def make_session(client, fpid, pose=(1.0, 1.0, 0.785398), noise=None):
    body = {
        "floorplan_id": fpid,
        "start_pose": list(pose),
        "instruction": "You are in kitchen 0. Go to kitchen 0 and stop by the sink.",
    }
    if noise:
        body["noise"] = noise
    return client.post("/sessions", json=body)


class TestFloorplans:
    def test_upload_and_get(self, client):
        fpid = upload_plan(client)
        r = client.get(f"/floorplans/{fpid}")
        assert r.status_code == 200
        doc = r.json()
        assert doc["scene_id"] == "test-room"
        assert doc["regions"][0]["type"] == "kitchen"

    def test_upload_invalid_document(self, client):
        r = client.post("/floorplans", content="{broken")
        assert r.status_code == 422
        assert r.json()["error"] == "floorplan_invalid"

    def test_raster_served(self, client):
        fpid = upload_plan(client)
        r = client.get(f"/floorplans/{fpid}/raster.png")
        assert r.status_code == 200
        assert r.headers["content-type"] == "image/png"
        assert r.content[:8] == b"\x89PNG\r\n\x1a\n"

    def test_listing(self, client):
        fpid = upload_plan(client)
        r = client.get("/floorplans")
        entries = r.json()["floorplans"]
        assert [e["floorplan_id"] for e in entries] == [fpid]
        assert entries[0]["regions"][0]["id"] == 0


class TestCreateSession:
    def test_valid_session(self, client):
        fpid = upload_plan(client)
        r = make_session(client, fpid)
        assert r.status_code == 200, r.text
        view = r.json()
        assert view["status"] == "running"
        assert view["step"] == 0
        assert view["frame_url"].endswith("/frame.png")
        frame = client.get(view["frame_url"])
        assert frame.status_code == 200

    def test_unknown_plan(self, client):
        r = make_session(client, "doesnotexist")
        assert r.status_code == 404
        assert r.json()["error"] == "unknown_plan"

    def test_pose_outside_plan(self, client):
        fpid = upload_plan(client)
        r = make_session(client, fpid, pose=(50, 50, 0))
        assert r.status_code == 422
        assert r.json()["error"] == "pose_invalid"

    def test_pose_inside_wall(self, client):
        fpid = upload_plan(client)
        r = make_session(client, fpid, pose=(0.001, 4.0, 0))
        assert r.status_code == 422
        assert r.json()["error"] == "pose_invalid"

    def test_gibberish_instruction(self, client):
        fpid = upload_plan(client)
        r = client.post("/sessions", json={
            "floorplan_id": fpid,
            "start_pose": [1, 1, 0],
            "instruction": "gibberish",
        })
        assert r.status_code == 422
        body = r.json()
        assert body["error"] == "instruction_parse_error"
        assert "nearest template" in body["detail"]

    def test_goal_region_not_on_plan(self, client):
        fpid = upload_plan(client)
        r = client.post("/sessions", json={
            "floorplan_id": fpid,
            "start_pose": [1, 1, 0],
            "instruction": "You are in kitchen 0. Go to bedroom 7 and stop by the bed.",
        })
        assert r.status_code == 422
        assert r.json()["error"] == "instruction_parse_error"


class TestStep:
    def test_forward_keeps_running(self, client):
        fpid = upload_plan(client)
        sid = make_session(client, fpid).json()["session_id"]
        r = client.post(f"/sessions/{sid}/step", json={"action": "MoveForward"})
        view = r.json()
        assert view["status"] == "running"
        assert view["step"] == 1

    def test_composite_action_decomposed(self, client):
        fpid = upload_plan(client)
        sid = make_session(client, fpid).json()["session_id"]
        r = client.post(f"/sessions/{sid}/step",
                        json={"action": "MoveForward", "magnitude": 0.75})
        assert r.json()["step"] == 3

    def test_stop_near_goal_is_success(self, client):
        fpid = upload_plan(client)
        sid = make_session(client, fpid).json()["session_id"]
        for _ in range(8):
            client.post(f"/sessions/{sid}/step", json={"action": "MoveForward"})
        r = client.post(f"/sessions/{sid}/step", json={"action": "Stop"})
        view = r.json()
        assert view["status"] == "success"
        assert view["ne"] < 3.0

    def test_stop_far_is_failure_with_ne(self, client):
        fpid = upload_plan(client)
        sid = make_session(client, fpid).json()["session_id"]
        r = client.post(f"/sessions/{sid}/step", json={"action": "Stop"})
        view = r.json()
        assert view["status"] == "failure"
        assert view["ne"] == pytest.approx(math.hypot(3, 3), abs=1e-6)

    def test_step_after_stop_conflict(self, client):
        fpid = upload_plan(client)
        sid = make_session(client, fpid).json()["session_id"]
        client.post(f"/sessions/{sid}/step", json={"action": "Stop"})
        r = client.post(f"/sessions/{sid}/step", json={"action": "MoveForward"})
        assert r.status_code == 409
        assert r.json()["error"] == "session_stopped"

    def test_unknown_session(self, client):
        r = client.post("/sessions/nope/step", json={"action": "Stop"})
        assert r.status_code == 404

    def test_turns_default_to_primitive(self, client):
        fpid = upload_plan(client)
        sid = make_session(client, fpid).json()["session_id"]
        r = client.post(f"/sessions/{sid}/step", json={"action": "TurnRight"})
        pose = r.json()["true_pose"]
        assert pose[2] == pytest.approx(0.785398 + math.radians(15), abs=1e-6)


class TestSaveEpisode:
    def test_save_requires_stop(self, client):
        fpid = upload_plan(client)
        sid = make_session(client, fpid).json()["session_id"]
        r = client.post(f"/sessions/{sid}/save")
        assert r.status_code == 409
        assert r.json()["error"] == "session_running"

    def test_save_successful_demo_and_replay(self, client, tmp_path):
        fpid = upload_plan(client)
        sid = make_session(client, fpid).json()["session_id"]
        for _ in range(8):
            client.post(f"/sessions/{sid}/step", json={"action": "MoveForward"})
        client.post(f"/sessions/{sid}/step", json={"action": "Stop"})
        r = client.post(f"/sessions/{sid}/save")
        assert r.status_code == 200, r.text
        eid = r.json()["episode_id"]
        assert eid in client.get("/episodes").json()["episodes"]

        doc = client.get(f"/episodes/{eid}").json()
        assert set(doc) == {"episode_id", "floorplan", "start_pose", "goal",
                            "instruction", "gt_path"}
        # replays to success under zero noise
        from floornav.dataset.episodes import episode_from_dict, replay_actions
        from floornav.geometry import parse_floorplan
        from floornav.simulator import check_success

        fp = parse_floorplan(json.dumps(client.get(f"/floorplans/{fpid}").json()))
        ep = episode_from_dict(doc, floorplan=fp)
        st = replay_actions(fp, ep.start_pose, ep.gt_actions, goal=ep.goal)
        assert check_success(st)

    def test_failed_demo_rejected(self, client):
        fpid = upload_plan(client)
        sid = make_session(client, fpid).json()["session_id"]
        client.post(f"/sessions/{sid}/step", json={"action": "Stop"})
        r = client.post(f"/sessions/{sid}/save")
        assert r.status_code == 422
        assert r.json()["error"] == "episode_invalid"


class TestRuns:
    def test_run_table_served(self, client, tmp_path):
        store = client.app.state.store
        run_dir = store.run_dir("r1")
        run_dir.mkdir(parents=True)
        (run_dir / "table.md").write_text("| cell | NE | OSR | SR | SPL |\n")
        r = client.get("/runs/r1/table")
        assert r.status_code == 200
        assert "SPL" in r.text
        assert client.get("/runs").json()["runs"] == ["r1"]

    def test_unknown_run(self, client):
        assert client.get("/runs/none/table").status_code == 404


class TestStoreConfig:
    def test_store_root_from_env_var(self, tmp_path, monkeypatch):
        from floornav.service import STORE_ENV_VAR

        monkeypatch.setenv(STORE_ENV_VAR, str(tmp_path / "envstore"))
        app = create_app()
        assert app.state.store.root == tmp_path / "envstore"
        assert (tmp_path / "envstore" / "floorplans").is_dir()


class TestPersistence:
    def test_every_saved_artifact_reparses(self, client):
        fpid = upload_plan(client)
        sid = make_session(client, fpid).json()["session_id"]
        for _ in range(8):
            client.post(f"/sessions/{sid}/step", json={"action": "MoveForward"})
        client.post(f"/sessions/{sid}/step", json={"action": "Stop"})
        client.post(f"/sessions/{sid}/save")

        store = client.app.state.store
        from floornav.geometry import parse_floorplan

        for p in (store.root / "floorplans").glob("*.json"):
            parse_floorplan(p.read_text(encoding="utf-8"))
        from floornav.dataset.episodes import episode_from_dict

        for p in (store.root / "episodes").glob("*.json"):
            episode_from_dict(json.loads(p.read_text(encoding="utf-8")))
        snapshot = store.load_session_snapshot(sid)
        assert snapshot is not None
        assert snapshot["terminated"] is True
        assert len(snapshot["trajectory"]) == snapshot["step_count"] + 1


class TestSessionView:
    def test_refetch_reproduces_view(self, client):
        fpid = upload_plan(client)
        created = make_session(client, fpid).json()
        sid = created["session_id"]
        client.post(f"/sessions/{sid}/step", json={"action": "MoveForward"})
        a = client.get(f"/sessions/{sid}").json()
        b = client.get(f"/sessions/{sid}").json()
        assert a == b
        assert a["step"] == 1
        assert a["believed_pose"] == a["true_pose"]  # zero noise
