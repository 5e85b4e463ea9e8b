import logging
import math

import numpy as np
import pytest

from floornav.dataset import (
    REGION_TYPES,
    TEMPLATES,
    balance_actions,
    decompose_action,
    decompose_sequence,
    gen_instruction,
    gen_synthetic_floorplan,
    merge_actions,
    parse_instruction,
    sample_video_frames,
)
from floornav.dataset.instructions import InstructionError, render_instruction
from floornav.dataset.qa import QaRecord
from floornav.dataset.episodes import RegionTrace
from floornav.geometry import region_adjacency, validate_floorplan
from floornav.simulator import Action, ActionKind


class TestFloorGen:
    def test_single_room_plan(self):
        fp = gen_synthetic_floorplan(room_count=1, seed=3)
        assert len(fp.regions) == 2
        assert {r.region_id for r in fp.regions} == {0, 1}
        assert region_adjacency(fp) == frozenset({(0, 1)})

    def test_seed_reproducibility(self):
        a = gen_synthetic_floorplan(room_count=4, seed=42)
        b = gen_synthetic_floorplan(room_count=4, seed=42)
        assert a == b

    def test_types_from_catalog_and_corridor_id_zero(self):
        fp = gen_synthetic_floorplan(room_count=5, seed=1)
        assert fp.regions_by_id[0].region_type == "hallway"
        for r in fp.regions:
            assert r.region_type in REGION_TYPES

    def test_many_plans_valid_and_connected(self):
        # DERIVED: 200 plans all validate and have connected adjacency graphs.
        for i in range(200):
            fp = gen_synthetic_floorplan(room_count=1 + i % 8, seed=i)
            validate_floorplan(fp)
            adj = region_adjacency(fp)
            ids = {r.region_id for r in fp.regions}
            seen = {0}
            frontier = [0]
            while frontier:
                cur = frontier.pop()
                for a, b in adj:
                    other = b if a == cur else a if b == cur else None
                    if other is not None and other not in seen:
                        seen.add(other)
                        frontier.append(other)
            assert seen == ids, f"plan seed={i} not connected"

    def test_infeasible_specs_rejected(self):
        with pytest.raises(ValueError, match="room_count"):
            gen_synthetic_floorplan(room_count=0, seed=1)
        with pytest.raises(ValueError, match="infeasible"):
            gen_synthetic_floorplan(room_count=2, seed=1, room_size=(1.0, 1.2))


class TestInstructions:
    def test_template_zero_exact_rendering(self):
        trace = RegionTrace(((0, 0, "living room"),), ((0, "living room"),))
        ins = gen_instruction(trace, "next to the bed", 0, goal_id=1, goal_type="bedroom")
        assert ins.rendered == ("You are in living room 0. Go to bedroom 1 "
                                "and stop next to the bed.")

    def test_roundtrip_all_templates_random_fills(self):
        rng = np.random.default_rng(5)
        stops = ("next to the bed", "by door 12", "under the big lamp", "")
        for tid in range(10):
            for _ in range(25):
                st = str(rng.choice(REGION_TYPES))
                gt = str(rng.choice(REGION_TYPES))
                sid, gid = int(rng.integers(0, 40)), int(rng.integers(0, 40))
                stop = str(rng.choice(stops))
                ins = render_instruction(tid, st, sid, gt, gid, stop)
                back = parse_instruction(ins.rendered)
                assert back == ins

    def test_empty_stop_condition_uses_bare_variant(self):
        ins = render_instruction(0, "kitchen", 2, "office", 7, "")
        assert ins.rendered == "You are in kitchen 2. Go to office 7."
        assert parse_instruction(ins.rendered).stop_condition == ""

    def test_unknown_template_id(self):
        with pytest.raises(InstructionError, match="template_id"):
            render_instruction(10, "kitchen", 0, "office", 1, "x")

    def test_parse_failure_names_nearest_template(self):
        with pytest.raises(InstructionError, match="nearest template"):
            parse_instruction("gibberish that matches nothing")

    def test_templates_count_and_placeholders(self):
        assert len(TEMPLATES) == 10
        for full, bare in TEMPLATES:
            for ph in ("{start_type}", "{start_id}", "{goal_type}", "{goal_id}"):
                assert ph in full and ph in bare
            assert "{stop_condition}" in full
            assert "{stop_condition}" not in bare


def F(m=0.25):
    return Action(ActionKind.MOVE_FORWARD, m)


def L(rad=math.radians(15)):
    return Action(ActionKind.TURN_LEFT, rad)


def R(rad=math.radians(15)):
    return Action(ActionKind.TURN_RIGHT, rad)


STOP = Action(ActionKind.STOP)


class TestMergeDecompose:
    def test_merge_forwards(self):
        out = merge_actions([F(), F(), F()])
        assert len(out) == 1
        assert out[0].kind is ActionKind.MOVE_FORWARD
        assert out[0].magnitude == pytest.approx(0.75)

    def test_merge_mixed_sequence(self):
        out = merge_actions([F(), L(), L(), F(), STOP])
        assert [a.kind for a in out] == [ActionKind.MOVE_FORWARD, ActionKind.TURN_LEFT,
                                         ActionKind.MOVE_FORWARD, ActionKind.STOP]
        assert out[1].magnitude == pytest.approx(math.radians(30))

    def test_decompose_forward(self):
        out = decompose_action(F(0.75))
        assert len(out) == 3
        assert all(a.magnitude == 0.25 for a in out)

    def test_decompose_turn(self):
        out = decompose_action(L(math.radians(30)))
        assert len(out) == 2

    def test_decompose_below_primitive_rounds_up_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING):
            out = decompose_action(F(0.10))
        assert len(out) == 1
        assert out[0].magnitude == 0.25
        assert any("rounded" in r.message for r in caplog.records)

    def test_merge_decompose_replay_equivalence(self, open_arena_plan):
        # DERIVED: zero-noise replay of s and decompose(merge(s)) agree.
        from floornav.dataset.episodes import replay_actions
        from floornav.simulator import AgentPose

        rng = np.random.default_rng(11)
        for _ in range(50):
            seq = []
            for _ in range(int(rng.integers(1, 40))):
                seq.append([F, L, R][int(rng.integers(0, 3))]())
            seq.append(STOP)
            a = replay_actions(open_arena_plan, AgentPose(0, 0, 0), seq)
            b = replay_actions(open_arena_plan, AgentPose(0, 0, 0),
                               decompose_sequence(merge_actions(seq)))
            assert a.true_pose.x == pytest.approx(b.true_pose.x, abs=1e-9)
            assert a.true_pose.y == pytest.approx(b.true_pose.y, abs=1e-9)
            assert abs(a.true_pose.theta - b.true_pose.theta) % (2 * math.pi) == \
                pytest.approx(0, abs=1e-9)


class TestSampleVideoFrames:
    def test_short_video_keeps_all(self):
        assert sample_video_frames(4) == [0, 1, 2, 3]

    def test_ten_frames(self):
        assert sample_video_frames(10) == [0, 2, 4, 5, 7, 9]

    def test_hundred_frames(self):
        # DERIVED: endpoints kept, six indices, near-uniform gaps.
        out = sample_video_frames(100)
        assert out[0] == 0 and out[-1] == 99
        assert len(out) == 6
        gaps = [b - a for a, b in zip(out, out[1:])]
        ideal = 99 / 5
        assert all(abs(g - ideal) <= 1.0 for g in gaps)

    def test_single_frame(self):
        assert sample_video_frames(1) == [0]

    def test_always_contains_endpoints(self):
        for t in range(1, 60):
            out = sample_video_frames(t)
            assert out[0] == 0 and out[-1] == t - 1
            assert len(out) == min(t, 6)
            assert out == sorted(set(out))


def nav_record(action):
    return QaRecord(task="nav", prompt="p", frames=[], target="t", action=action)


class TestBalance:
    def test_uniform_unchanged(self):
        recs = [nav_record(F(0.5)), nav_record(L()), nav_record(R()), nav_record(STOP)]
        out, report = balance_actions(recs)
        assert out == recs
        assert report["before"] == report["after"]

    def test_underrepresented_class_upsampled(self):
        # DERIVED: recompute histogram after balancing.
        recs = [nav_record(F(0.25)) for _ in range(90)] + [nav_record(STOP) for _ in range(10)]
        out, report = balance_actions(recs)
        floor = 0.5 * (100 / 2)
        assert report["after"]["Stop"] >= floor
        assert report["after"]["MoveForward"] == 90

    def test_output_superset_of_input(self):
        recs = [nav_record(F(0.25)) for _ in range(20)] + [nav_record(STOP)]
        out, _ = balance_actions(recs)
        for rec in recs:
            assert out.count(rec) >= recs.count(rec)
        assert len(out) >= len(recs)
