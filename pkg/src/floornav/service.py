"""Persistence store and HTTP session API for interactive episodes.

Store layout under the root directory:
  floorplans/<id>.json   canonical plan documents (id = content hash)
  episodes/<id>.json     saved episodes
  runs/<id>/             benchmark outputs (table.md/csv, results.jsonl)
  sessions/<id>/         session snapshot + rendered frames

All writes are atomic (write-temp-then-rename). Session stepping is serialized
per session; everything underneath is pure.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse, Response

from .dataset.actions import decompose_action
from .dataset.episodes import (
    Episode,
    annotate_trajectory,
    replay_actions,
    serialize_episode,
)
from .dataset.instructions import Instruction, InstructionError, parse_instruction
from .geometry import (
    FloorPlan,
    FloorPlanError,
    Point2,
    extract_walls,
    locate_region,
    parse_floorplan,
    pole_of_inaccessibility,
    serialize_floorplan,
)
from .render import (
    RasterConfig,
    RaycastConfig,
    compose_dual_view,
    overlay_pose_trajectory,
    raycast_observation,
    render_floorplan,
    save_png,
)
from .simulator import (
    Action,
    ActionKind,
    AgentPose,
    EpisodeState,
    NoiseConfig,
    PRIMITIVE_TURN_RAD,
    WALL_CLEARANCE_M,
    check_success,
    reset,
    step,
)

STORE_ENV_VAR = "FPNAV_STORE"
DEFAULT_STORE = "./fpnav-store"


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + f".tmp-{os.getpid()}-{threading.get_ident()}")
    tmp.write_bytes(data)
    os.replace(tmp, path)


class Store:
    """Content-addressed artifact store with atomic writes."""

    def __init__(self, root) -> None:
        self.root = Path(root)
        for sub in ("floorplans", "episodes", "runs", "sessions"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    # floor plans ---------------------------------------------------------
    def put_floorplan(self, document_text: str) -> str:
        fp = parse_floorplan(document_text)
        canonical = serialize_floorplan(fp)
        fpid = hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]
        _atomic_write(self.root / "floorplans" / f"{fpid}.json",
                      canonical.encode("utf-8"))
        return fpid

    def has_floorplan(self, fpid: str) -> bool:
        return (self.root / "floorplans" / f"{fpid}.json").exists()

    def get_floorplan(self, fpid: str) -> FloorPlan:
        text = (self.root / "floorplans" / f"{fpid}.json").read_text(encoding="utf-8")
        return parse_floorplan(text)

    def list_floorplans(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "floorplans").glob("*.json"))

    def floorplan_raster_path(self, fpid: str) -> Path:
        png = self.root / "floorplans" / f"{fpid}.png"
        if not png.exists():
            raster = render_floorplan(self.get_floorplan(fpid), RasterConfig())
            tmp = png.with_suffix(".png.tmp")
            save_png(raster, tmp)
            os.replace(tmp, png)
        return png

    # episodes --------------------------------------------------------------
    def put_episode(self, ep: Episode) -> str:
        text = serialize_episode(ep)
        _atomic_write(self.root / "episodes" / f"{ep.episode_id}.json",
                      text.encode("utf-8"))
        return ep.episode_id

    def list_episodes(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "episodes").glob("*.json"))

    def get_episode_doc(self, eid: str) -> dict:
        return json.loads((self.root / "episodes" / f"{eid}.json").read_text(encoding="utf-8"))

    # runs --------------------------------------------------------------------
    def run_dir(self, run_id: str) -> Path:
        return self.root / "runs" / run_id

    def list_runs(self) -> list[str]:
        return sorted(p.name for p in (self.root / "runs").iterdir() if p.is_dir())

    # sessions ------------------------------------------------------------
    def session_dir(self, sid: str) -> Path:
        return self.root / "sessions" / sid

    def save_session_snapshot(self, sid: str, snapshot: dict) -> None:
        _atomic_write(self.session_dir(sid) / "session.json",
                      (json.dumps(snapshot, indent=2) + "\n").encode("utf-8"))

    def load_session_snapshot(self, sid: str) -> dict | None:
        p = self.session_dir(sid) / "session.json"
        if not p.exists():
            return None
        return json.loads(p.read_text(encoding="utf-8"))


@dataclass
class LiveSession:
    session_id: str
    floorplan_id: str
    floorplan: FloorPlan
    state: EpisodeState
    instruction: Instruction
    created_at: float
    frame_cursor: int = 0
    status: str = "running"  # running | success | failure
    base_raster: object = field(default=None, repr=False)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


class ApiError(Exception):
    def __init__(self, status_code: int, code: str, detail: str):
        super().__init__(detail)
        self.status_code = status_code
        self.code = code
        self.detail = detail


def create_app(store_root=None, ui_dir=None) -> FastAPI:
    root = store_root or os.environ.get(STORE_ENV_VAR, DEFAULT_STORE)
    store = Store(root)
    sessions: dict[str, LiveSession] = {}
    sessions_lock = threading.Lock()

    app = FastAPI(title="floornav", version="0.1.0")
    app.state.store = store

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status_code,
                            content={"error": exc.code, "detail": exc.detail})

    # -- floor plans -------------------------------------------------------
    @app.post("/floorplans")
    async def upload_floorplan(request: Request):
        body = await request.body()
        try:
            fpid = store.put_floorplan(body.decode("utf-8"))
        except (FloorPlanError, UnicodeDecodeError) as e:
            raise ApiError(422, "floorplan_invalid", str(e))
        return {"floorplan_id": fpid}

    @app.get("/floorplans")
    def list_floorplans():
        out = []
        for fpid in store.list_floorplans():
            fp = store.get_floorplan(fpid)
            out.append({
                "floorplan_id": fpid,
                "scene_id": fp.scene_id,
                "floor_id": fp.floor_id,
                "regions": [
                    {"id": r.region_id, "type": r.region_type}
                    for r in sorted(fp.regions, key=lambda r: r.region_id)
                ],
            })
        return {"floorplans": out}

    @app.get("/floorplans/{fpid}")
    def get_floorplan(fpid: str):
        if not store.has_floorplan(fpid):
            raise ApiError(404, "unknown_plan", f"no floor plan {fpid}")
        fp = store.get_floorplan(fpid)
        doc = json.loads(serialize_floorplan(fp))
        minx, miny, maxx, maxy = fp.bounds
        cfg = RasterConfig()
        doc["render"] = {
            "pixels_per_meter": cfg.pixels_per_meter,
            "margin": cfg.margin,
            "bounds": [minx, miny, maxx, maxy],
        }
        return doc

    @app.get("/floorplans/{fpid}/raster.png")
    def get_floorplan_raster(fpid: str):
        if not store.has_floorplan(fpid):
            raise ApiError(404, "unknown_plan", f"no floor plan {fpid}")
        png = store.floorplan_raster_path(fpid)
        return Response(content=png.read_bytes(), media_type="image/png")

    # -- sessions ---------------------------------------------------------
    def _get_session(sid: str) -> LiveSession:
        with sessions_lock:
            live = sessions.get(sid)
        if live is None:
            raise ApiError(404, "unknown_session", f"no session {sid}")
        return live

    def _render_frame(live: LiveSession) -> None:
        fp = live.floorplan
        cfg = RasterConfig()
        if live.base_raster is None:
            live.base_raster = render_floorplan(fp, cfg)
        st = live.state
        plan_view = overlay_pose_trajectory(live.base_raster, fp, cfg,
                                            st.trajectory[:-1] or [st.true_pose],
                                            st.true_pose, alpha=st.scale_alpha)
        obs = raycast_observation(fp, st.true_pose, RaycastConfig())
        frame = compose_dual_view(obs, plan_view, timestamp_step=st.step_count)
        out = store.session_dir(live.session_id) / "frames" / f"{live.frame_cursor:05d}.png"
        out.parent.mkdir(parents=True, exist_ok=True)
        save_png(frame.image, out)
        live.frame_cursor += 1

    def _snapshot(live: LiveSession) -> dict:
        st = live.state
        return {
            "session_id": live.session_id,
            "floorplan_id": live.floorplan_id,
            "instruction": live.instruction.to_dict(),
            "noise": st.noise.to_dict(),
            "created_at": live.created_at,
            "status": live.status,
            "goal": [st.goal.x, st.goal.y],
            "scale_alpha": st.scale_alpha,
            "step_count": st.step_count,
            "terminated": st.terminated,
            "actions": [{"kind": a.kind.value, "magnitude": a.magnitude}
                        for a in st.actions],
            "trajectory": [p.as_list() for p in st.trajectory],
            "believed_trajectory": [p.as_list() for p in st.believed_trajectory],
            "frame_cursor": live.frame_cursor,
        }

    def _session_view(live: LiveSession) -> dict:
        st = live.state
        return {
            "session_id": live.session_id,
            "floorplan_id": live.floorplan_id,
            "status": live.status,
            "step": st.step_count,
            "true_pose": st.true_pose.as_list(),
            "believed_pose": st.believed_pose.as_list(),
            "goal": [st.goal.x, st.goal.y],
            "instruction": live.instruction.to_dict(),
            "frame_url": f"/sessions/{live.session_id}/frame.png",
            "ne": st.true_pose.position.distance_to(st.goal),
        }

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await request.json()
        fpid = body.get("floorplan_id", "")
        if not store.has_floorplan(fpid):
            raise ApiError(404, "unknown_plan", f"no floor plan {fpid!r}")
        fp = store.get_floorplan(fpid)

        try:
            instruction = parse_instruction(body.get("instruction", ""))
        except InstructionError as e:
            raise ApiError(422, "instruction_parse_error", str(e))
        goal_region = fp.regions_by_id.get(instruction.goal_id)
        if goal_region is None or goal_region.region_type != instruction.goal_type:
            raise ApiError(422, "instruction_parse_error",
                           f"goal region {instruction.goal_type} {instruction.goal_id} "
                           f"is not on floor plan {fpid}")

        try:
            pose = AgentPose(*[float(v) for v in body.get("start_pose", [])])
        except (TypeError, ValueError):
            raise ApiError(422, "pose_invalid", "start_pose must be [x, y, theta]")
        if locate_region(fp, pose.position) is None:
            raise ApiError(422, "pose_invalid",
                           f"start pose ({pose.x:.2f}, {pose.y:.2f}) is outside all regions")
        walls = extract_walls(fp).segment_array
        if walls.shape[0]:
            import numpy as np

            ax, ay, bx, by = walls[:, 0], walls[:, 1], walls[:, 2], walls[:, 3]
            wx, wy = bx - ax, by - ay
            ll = wx * wx + wy * wy
            t = np.clip(((pose.x - ax) * wx + (pose.y - ay) * wy) /
                        np.where(ll == 0, 1, ll), 0, 1)
            d = float(np.min(np.hypot(pose.x - (ax + t * wx), pose.y - (ay + t * wy))))
            if d < WALL_CLEARANCE_M:
                raise ApiError(422, "pose_invalid",
                               f"start pose is inside a wall (clearance {d:.3f} m)")

        noise = NoiseConfig.from_dict(body.get("noise") or {})
        goal = pole_of_inaccessibility(goal_region.polygon)
        state = reset(fp, pose, goal, noise)
        sid = uuid.uuid4().hex[:12]
        live = LiveSession(sid, fpid, fp, state, instruction, created_at=time.time())
        with live.lock:
            _render_frame(live)
            store.save_session_snapshot(sid, _snapshot(live))
        with sessions_lock:
            sessions[sid] = live
        return _session_view(live)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return _session_view(_get_session(sid))

    @app.post("/sessions/{sid}/step")
    async def step_session(sid: str, request: Request):
        live = _get_session(sid)
        body = await request.json()
        kind_name = body.get("action", "")
        kinds = {a.value: a for a in ActionKind}
        if kind_name not in kinds:
            raise ApiError(422, "action_invalid", f"unknown action {kind_name!r}")
        kind = kinds[kind_name]
        mag = body.get("magnitude")
        try:
            if kind is ActionKind.STOP:
                action = Action.stop()
            elif mag is None:
                # default to one primitive
                action = (Action.move_forward() if kind is ActionKind.MOVE_FORWARD
                          else Action(kind, PRIMITIVE_TURN_RAD))
            else:
                action = Action(kind, float(mag))
        except (TypeError, ValueError) as e:
            raise ApiError(422, "action_invalid", str(e))

        with live.lock:
            if live.state.terminated:
                raise ApiError(409, "session_stopped", "cannot step a stopped session")
            for prim in decompose_action(action):
                if live.state.terminated:
                    break
                step(live.state, prim)
            if live.state.terminated:
                live.status = "success" if check_success(live.state) else "failure"
            _render_frame(live)
            store.save_session_snapshot(sid, _snapshot(live))
            return _session_view(live)

    @app.get("/sessions/{sid}/frame.png")
    def get_frame(sid: str):
        live = _get_session(sid)
        with live.lock:
            idx = live.frame_cursor - 1
            png = store.session_dir(sid) / "frames" / f"{idx:05d}.png"
            data = png.read_bytes()
        return Response(content=data, media_type="image/png",
                        headers={"Cache-Control": "no-store"})

    @app.post("/sessions/{sid}/save")
    def save_session(sid: str):
        live = _get_session(sid)
        with live.lock:
            if not live.state.terminated:
                raise ApiError(409, "session_running",
                               "stop the session before saving it as an episode")
            st = live.state
            waypoints = [st.trajectory[0].position]
            for p in st.trajectory[1:]:
                if p.position.distance_to(waypoints[-1]) > 1e-9:
                    waypoints.append(p.position)
            ep = Episode(
                episode_id="pending",
                floorplan_ref=f"../floorplans/{live.floorplan_id}.json",
                start_pose=st.trajectory[0],
                goal=st.goal,
                instruction=live.instruction,
                gt_path=tuple(waypoints),
                gt_actions=tuple(st.actions),
                floorplan=live.floorplan,
            )
            problems = _episode_invariant_problems(ep)
            if problems:
                raise ApiError(422, "episode_invalid", "; ".join(problems))
            eid = "demo-" + hashlib.sha256(
                serialize_episode(ep).encode("utf-8")).hexdigest()[:10]
            ep.episode_id = eid
            store.put_episode(ep)
        return {"episode_id": eid}

    # -- episodes and runs -------------------------------------------------
    @app.get("/episodes")
    def list_episodes():
        return {"episodes": store.list_episodes()}

    @app.get("/episodes/{eid}")
    def get_episode(eid: str):
        if eid not in store.list_episodes():
            raise ApiError(404, "unknown_episode", f"no episode {eid}")
        return store.get_episode_doc(eid)

    @app.get("/runs")
    def list_runs():
        return {"runs": store.list_runs()}

    @app.get("/runs/{run_id}/table")
    def get_run_table(run_id: str, fmt: str = "md"):
        path = store.run_dir(run_id) / ("table.csv" if fmt == "csv" else "table.md")
        if not path.exists():
            raise ApiError(404, "unknown_run", f"no run {run_id} with a {fmt} table")
        return PlainTextResponse(path.read_text(encoding="utf-8"))

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def _episode_invariant_problems(ep: Episode) -> list[str]:
    """Check the Episode contract on a candidate demonstration."""
    problems = []
    if ep.gt_path[0].distance_to(ep.start_pose.position) > 1e-9:
        problems.append("gt_path must start at the start pose")
    fp = ep.floorplan
    st = replay_actions(fp, ep.start_pose, ep.gt_actions, goal=ep.goal)
    for i, wp in enumerate(ep.gt_path):
        if min(p.position.distance_to(wp) for p in st.trajectory) > 0.25:
            problems.append(f"noise-free replay misses waypoint {i}")
            break
    if not st.terminated or not check_success(st):
        problems.append("noise-free replay does not reach the goal")
    trace = annotate_trajectory(fp, list(ep.gt_path))
    goal_region = locate_region(fp, ep.goal)
    if (goal_region is None or not trace.compressed or
            trace.compressed[-1][0] != goal_region.region_id):
        problems.append("goal is not inside the final region of the path")
    return problems
