"""Command-line interface: dataset generation, rendering, benchmarks, serving."""

from __future__ import annotations

import argparse
import json
import math
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from .dataset.actions import merge_actions, sample_video_frames
from .dataset.episodes import (
    annotate_trajectory,
    gen_episodes,
    load_episode,
    save_episode,
)
from .dataset.export import LAYOUTS, export_dataset
from .dataset.floorgen import gen_synthetic_floorplan
from .dataset.qa import (
    gen_localization_qa,
    gen_nav_qa,
    gen_summarization_qa,
    gen_trajectory_reasoning_qa,
    write_qa_jsonl,
)
from .evaluation.benchmark import AblationSpec, parse_plan_mode, render_table, run_benchmark
from .evaluation.metrics import MetricsSummary
from .evaluation.policies import PolicySpec
from .geometry import Point2, parse_floorplan, serialize_floorplan
from .render import RasterConfig, overlay_pose_trajectory, render_floorplan, save_png
from .simulator import AgentPose, NoiseConfig


def _add_noise_flags(p: argparse.ArgumentParser):
    p.add_argument("--sigma-move", type=float, default=0.0)
    p.add_argument("--sigma-rot", type=float, default=0.0)
    p.add_argument("--sigma-drift", type=float, default=None)
    p.add_argument("--sigma-scale", type=float, default=0.0)
    p.add_argument("--sigma-jitter", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)


def _noise_from_args(args) -> NoiseConfig:
    return NoiseConfig(
        sigma_move=args.sigma_move,
        sigma_rot=args.sigma_rot,
        sigma_drift=args.sigma_drift,
        sigma_scale=args.sigma_scale,
        sigma_jitter=args.sigma_jitter,
        seed=args.seed,
    )


def _load_plan(path) -> "FloorPlan":
    return parse_floorplan(Path(path).read_text(encoding="utf-8"))


def _load_episode_dir(path) -> list:
    episodes = []
    for p in sorted(Path(path).glob("*.json")):
        if p.name == "floorplan.json":
            continue
        episodes.append(load_episode(p))
    if not episodes:
        raise SystemExit(f"no episode files in {path}")
    return episodes


def cmd_gen_floorplan(args):
    fp = gen_synthetic_floorplan(room_count=args.rooms, seed=args.seed,
                                 room_size=(args.room_min, args.room_max),
                                 corridor_width=args.corridor_width)
    Path(args.out).write_text(serialize_floorplan(fp), encoding="utf-8")
    print(f"wrote {args.out}: {len(fp.regions)} regions, "
          f"{len(fp.type_catalog)} types")


def cmd_gen_episodes(args):
    fp = _load_plan(args.floorplan)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    plan_copy = out_dir / "floorplan.json"
    plan_copy.write_text(serialize_floorplan(fp), encoding="utf-8")
    episodes = gen_episodes(fp, count=args.count, seed=args.seed,
                            floorplan_ref="floorplan.json",
                            min_regions=args.min_regions)
    for ep in episodes:
        save_episode(ep, out_dir / f"{ep.episode_id}.json")
    print(f"wrote {len(episodes)} episodes to {out_dir}")


def cmd_annotate(args):
    fp = _load_plan(args.floorplan)
    if args.episode:
        ep = load_episode(args.episode, floorplan=fp)
        waypoints = list(ep.gt_path)
    else:
        pts = json.loads(Path(args.waypoints).read_text(encoding="utf-8"))
        waypoints = [Point2(float(x), float(y)) for x, y in pts]
    trace = annotate_trajectory(fp, waypoints)
    print(json.dumps({
        "per_waypoint": [[i, rid, rtype] for i, rid, rtype in trace.per_waypoint],
        "compressed": [[rid, rtype] for rid, rtype in trace.compressed],
    }, indent=2))


def cmd_render(args):
    fp = _load_plan(args.floorplan)
    cfg = RasterConfig(pixels_per_meter=args.pixels_per_meter)
    raster = render_floorplan(fp, cfg)
    if args.trajectory or args.pose:
        trajectory = []
        if args.trajectory:
            from .simulator import read_trajectory_jsonl

            for rec in read_trajectory_jsonl(args.trajectory):
                trajectory.append(AgentPose(*rec["true_pose"]))
        if args.pose:
            x, y, theta = (float(v) for v in args.pose.split(","))
            pose = AgentPose(x, y, theta)
        elif trajectory:
            pose = trajectory[-1]
        else:
            raise SystemExit("--pose required when no trajectory is given")
        raster = overlay_pose_trajectory(raster, fp, cfg, trajectory, pose,
                                         alpha=args.alpha)
    save_png(raster, args.out)
    print(f"wrote {args.out}")


def cmd_qa_gen(args):
    episodes = _load_episode_dir(args.episodes)
    rng = np.random.default_rng(args.seed)
    records = []
    for ep in episodes:
        steps = max(1, len(ep.gt_actions))
        if args.task == "nav":
            recs = gen_nav_qa(ep)
            if args.balance:
                from .dataset.actions import balance_actions

                recs, report = balance_actions(recs)
            records.extend(recs)
        elif args.task == "instruction_summarization":
            records.append(gen_summarization_qa(ep))
        else:
            n = min(args.per_episode, steps)
            ts = sorted(int(t) for t in rng.choice(steps, size=n, replace=False))
            for t in ts:
                if args.task == "region_localization":
                    records.append(gen_localization_qa(ep, t))
                else:
                    records.append(gen_trajectory_reasoning_qa(ep, t))
    write_qa_jsonl(records, args.out)
    print(f"wrote {len(records)} {args.task} records to {args.out}")


def cmd_export(args):
    episodes = _load_episode_dir(args.episodes)
    manifest = export_dataset(episodes, args.layout, args.out)
    n_frames = sum(
        len(r.get("frames", [])) +
        len(r.get("observation_frames", [])) + len(r.get("plan_frames", []))
        for r in manifest["episodes"])
    print(f"exported {len(manifest['episodes'])} episodes "
          f"({n_frames} frames) as {args.layout} to {args.out}")


def cmd_stats(args):
    episodes = _load_episode_dir(args.episodes)
    merged_hist = Counter()
    primitive_hist = Counter()
    lengths = []
    for ep in episodes:
        primitive_hist.update(a.kind.value for a in ep.gt_actions)
        merged_hist.update(a.kind.value for a in merge_actions(list(ep.gt_actions)))
        length = sum(ep.gt_path[i].distance_to(ep.gt_path[i + 1])
                     for i in range(len(ep.gt_path) - 1))
        lengths.append(length)
    regions_per_traj = Counter()
    for ep in episodes:
        fp = ep.floorplan
        trace = annotate_trajectory(fp, list(ep.gt_path))
        regions_per_traj[len(trace.compressed)] += 1

    print(f"episodes: {len(episodes)}")
    print(f"mean trajectory length: {np.mean(lengths):.2f} m")
    print("trajectory length histogram (1 m bins):")
    for lo in range(0, int(max(lengths)) + 1):
        n = sum(1 for L in lengths if lo <= L < lo + 1)
        if n:
            print(f"  {lo:3d}-{lo + 1:<3d} {'#' * n} ({n})")
    print("regions traversed per trajectory:")
    for k in sorted(regions_per_traj):
        print(f"  {k}: {regions_per_traj[k]}")
    print("primitive action frequencies:")
    for kind, n in sorted(primitive_hist.items()):
        print(f"  {kind:12s} {n}")
    print("merged action frequencies:")
    for kind, n in sorted(merged_hist.items()):
        print(f"  {kind:12s} {n}")


_POLICY_ALIASES = {
    "oracle": "oracle_closed_loop",
    "deadreck": "dead_reckoning",
    "random": "random",
    "external": "external",
}


def cmd_run(args):
    episodes = _load_episode_dir(args.episodes)
    plan_mode, mask_fraction = parse_plan_mode(args.plan_mode)
    noise = _noise_from_args(args)
    cell = AblationSpec(plan_mode=plan_mode, mask_fraction=mask_fraction, noise=noise)
    spec = PolicySpec(kind=_POLICY_ALIASES[args.policy], max_steps=args.max_steps,
                      seed=args.seed,
                      external_cmd=tuple(args.external_cmd.split()) if args.external_cmd else ())
    rows = run_benchmark(episodes, spec, [cell], out_dir=args.out,
                         distance_mode=args.distance,
                         use_episode_noise=args.noise_from_episodes)
    print(render_table(rows, "md"), end="")


def cmd_eval(args):
    results_dir = Path(args.results)
    log_path = results_dir / "results.jsonl"
    if not log_path.exists():
        raise SystemExit(f"no results.jsonl under {results_dir}")
    by_cell: dict[str, list[dict]] = {}
    with open(log_path, encoding="utf-8") as f:
        for line in f:
            rec = json.loads(line)
            by_cell.setdefault(rec["cell"], []).append(rec)

    class _Cell:
        def __init__(self, label):
            self.label = label

    rows = []
    for label in sorted(by_cell):
        recs = sorted(by_cell[label], key=lambda r: r["episode_id"])
        ne = [r["ne"] for r in recs if math.isfinite(r["ne"])]
        spl_terms = [
            (r["shortest_path_length"] / max(r["path_length"], r["shortest_path_length"]))
            if r["success"] else 0.0
            for r in recs
        ]
        summary = MetricsSummary(
            n_episodes=len(recs),
            ne_mean=sum(ne) / len(ne) if ne else math.inf,
            sr=sum(r["success"] for r in recs) / len(recs),
            osr=sum(r["oracle_success"] for r in recs) / len(recs),
            spl=sum(spl_terms) / len(recs),
        )
        rows.append((_Cell(label), summary, recs))
    print(render_table(rows, args.table), end="")


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    app = create_app(store_root=args.store_root, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floornav",
                                     description="floor-plan-guided navigation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-floorplan", help="generate a procedural floor plan")
    p.add_argument("--rooms", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--room-min", type=float, default=3.0)
    p.add_argument("--room-max", type=float, default=6.0)
    p.add_argument("--corridor-width", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_floorplan)

    p = sub.add_parser("gen-episodes", help="generate episodes on a floor plan")
    p.add_argument("--floorplan", required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-regions", type=int, default=3)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_gen_episodes)

    p = sub.add_parser("annotate", help="region trace for an episode or waypoint list")
    p.add_argument("--floorplan", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--episode")
    src.add_argument("--waypoints", help="JSON file with [[x, y], ...]")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("render", help="rasterize a floor plan (optionally with overlay)")
    p.add_argument("--floorplan", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trajectory", help="trajectory log (JSONL)")
    p.add_argument("--pose", help="x,y,theta")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--pixels-per-meter", type=float, default=40.0)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("qa-gen", help="generate auxiliary-task QA records")
    p.add_argument("--task", required=True,
                   choices=["nav", "region_localization", "trajectory_reasoning",
                            "instruction_summarization"])
    p.add_argument("--episodes", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--per-episode", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--balance", action="store_true",
                   help="upsample under-represented nav action classes")
    p.set_defaults(func=cmd_qa_gen)

    p = sub.add_parser("export", help="export frames in a model-input layout")
    p.add_argument("--layout", required=True, choices=list(LAYOUTS))
    p.add_argument("--episodes", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("stats", help="action and trajectory-length histograms")
    p.add_argument("--episodes", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("run", help="run a policy over episodes")
    p.add_argument("--episodes", required=True)
    p.add_argument("--policy", required=True, choices=sorted(_POLICY_ALIASES))
    p.add_argument("--plan-mode", default="full",
                   help="full | mask:<fraction> | random")
    p.add_argument("--max-steps", type=int, default=500)
    p.add_argument("--distance", default="euclidean", choices=["euclidean", "geodesic"])
    p.add_argument("--external-cmd", default="",
                   help="command line for --policy external")
    p.add_argument("--noise-from-episodes", action="store_true",
                   help="use each episode file's stored noise config when present")
    p.add_argument("--out", required=True)
    _add_noise_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="summarize results into a table")
    p.add_argument("--results", required=True)
    p.add_argument("--table", default="md", choices=["md", "csv"])
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="start the HTTP session API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--store-root", default=None)
    p.add_argument("--ui-dir", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
