import math

import numpy as np
import pytest

from floornav.geometry import Point2, extract_walls
from floornav.simulator import (
    Action,
    ActionKind,
    AgentPose,
    NoiseConfig,
    SimulationError,
    check_success,
    episode_result,
    jitter_floorplan,
    max_free_travel,
    project_to_plan,
    read_trajectory_jsonl,
    reset,
    step,
    trajectory_log_records,
    write_trajectory_jsonl,
)

from .conftest import make_plan, square
from floornav.geometry import Region


DEG15 = math.radians(15.0)


def pose(x=0.0, y=0.0, theta=0.0):
    return AgentPose(x, y, theta)


def compose_zero_noise(start: AgentPose, actions) -> AgentPose:
    """Independent closed-form fold of the update law with all noise zero."""
    x, y, theta = start.x, start.y, start.theta
    for a in actions:
        if a.kind is ActionKind.TURN_RIGHT:
            theta += a.magnitude
        elif a.kind is ActionKind.TURN_LEFT:
            theta -= a.magnitude
        elif a.kind is ActionKind.MOVE_FORWARD:
            x += a.magnitude * math.sin(theta)
            y += a.magnitude * math.cos(theta)
    return AgentPose(x, y, theta)


class TestReset:
    def test_alpha_is_exactly_one_without_scale_noise(self, open_arena_plan):
        st = reset(open_arena_plan, pose(), Point2(1, 1), NoiseConfig(seed=5))
        assert st.scale_alpha == 1.0

    def test_start_outside_regions_errors_naming_point(self, unit_square_plan):
        with pytest.raises(ValueError, match=r"start position \(5.*, 5.*\)"):
            reset(unit_square_plan, pose(5, 5), Point2(0.5, 0.5), NoiseConfig())

    def test_goal_outside_regions_errors(self, unit_square_plan):
        with pytest.raises(ValueError, match="goal"):
            reset(unit_square_plan, pose(0.5, 0.5), Point2(7, 7), NoiseConfig())

    def test_same_seed_same_alpha_and_stream(self, open_arena_plan):
        noise = NoiseConfig(sigma_move=0.2, sigma_rot=0.1, sigma_scale=0.05, seed=99)
        runs = []
        for _ in range(2):
            st = reset(open_arena_plan, pose(), Point2(1, 1), noise)
            for _ in range(20):
                step(st, Action.move_forward())
                step(st, Action.turn_right())
            runs.append((st.scale_alpha, [p.as_list() for p in st.trajectory]))
        assert runs[0] == runs[1]


class TestStepKinematics:
    def test_forward_moves_along_plus_y_at_theta_zero(self, open_arena_plan):
        st = reset(open_arena_plan, pose(), Point2(1, 1), NoiseConfig())
        step(st, Action.move_forward(0.25))
        assert st.true_pose.x == pytest.approx(0.0, abs=1e-12)
        assert st.true_pose.y == pytest.approx(0.25, abs=1e-12)
        assert st.true_pose.theta == 0.0

    def test_turn_right_is_clockwise_positive(self, open_arena_plan):
        st = reset(open_arena_plan, pose(), Point2(1, 1), NoiseConfig())
        step(st, Action.turn_right(DEG15))
        assert st.true_pose.theta == pytest.approx(0.2618, abs=1e-4)
        assert (st.true_pose.x, st.true_pose.y) == (0.0, 0.0)

    def test_turn_left_wraps_into_range(self, open_arena_plan):
        st = reset(open_arena_plan, pose(), Point2(1, 1), NoiseConfig())
        step(st, Action.turn_left(DEG15))
        assert st.true_pose.theta == pytest.approx(2 * math.pi - DEG15)

    def test_turn_then_forward_heads_plus_x(self, open_arena_plan):
        st = reset(open_arena_plan, pose(), Point2(1, 1), NoiseConfig())
        for _ in range(6):
            step(st, Action.turn_right(DEG15))
        step(st, Action.move_forward(0.25))
        assert st.true_pose.x == pytest.approx(0.25, abs=1e-12)
        assert st.true_pose.y == pytest.approx(0.0, abs=1e-12)

    def test_zero_noise_matches_closed_form_composition(self, open_arena_plan):
        # DERIVED: fold of the update equations, independent of the simulator.
        rng = np.random.default_rng(17)
        for _ in range(50):
            n = int(rng.integers(1, 50))
            actions = []
            for _ in range(n):
                k = int(rng.integers(0, 3))
                if k == 0:
                    actions.append(Action.move_forward())
                elif k == 1:
                    actions.append(Action.turn_left())
                else:
                    actions.append(Action.turn_right())
            start = pose(float(rng.uniform(-5, 5)), float(rng.uniform(-5, 5)),
                         float(rng.uniform(0, 2 * math.pi)))
            st = reset(open_arena_plan, start, Point2(1, 1), NoiseConfig())
            for a in actions:
                step(st, a)
            expected = compose_zero_noise(start, actions)
            assert st.true_pose.x == pytest.approx(expected.x, abs=1e-9)
            assert st.true_pose.y == pytest.approx(expected.y, abs=1e-9)
            assert abs(st.true_pose.theta - expected.theta) % (2 * math.pi) == \
                pytest.approx(0.0, abs=1e-12)

    def test_non_primitive_action_rejected(self, open_arena_plan):
        st = reset(open_arena_plan, pose(), Point2(1, 1), NoiseConfig())
        with pytest.raises(ValueError, match="decompose"):
            step(st, Action.move_forward(0.75))

    def test_step_after_stop_raises(self, open_arena_plan):
        st = reset(open_arena_plan, pose(), Point2(1, 1), NoiseConfig())
        step(st, Action.stop())
        assert st.terminated
        with pytest.raises(SimulationError):
            step(st, Action.move_forward())

    def test_believed_equals_true_when_noise_free(self, corridor_plan):
        from floornav.geometry import pole_of_inaccessibility

        start_region = corridor_plan.regions[1]
        p0 = pole_of_inaccessibility(start_region.polygon)
        st = reset(corridor_plan, AgentPose(p0.x, p0.y, 1.1), p0, NoiseConfig())
        rng = np.random.default_rng(3)
        for _ in range(120):
            k = int(rng.integers(0, 3))
            a = [Action.move_forward, Action.turn_left, Action.turn_right][k]()
            step(st, a)
        assert st.believed_pose == st.true_pose


class TestCollision:
    def test_truncates_with_clearance(self, unit_square_plan):
        # 0.20 m from the wall straight ahead: travels 0.15 m.
        st = reset(unit_square_plan, pose(0.5, 0.8, 0.0), Point2(0.5, 0.5), NoiseConfig())
        step(st, Action.move_forward(0.25))
        assert st.true_pose.y == pytest.approx(0.95, abs=1e-6)

    def test_never_closer_than_clearance_under_noise(self, corridor_plan):
        from floornav.geometry import pole_of_inaccessibility

        walls = extract_walls(corridor_plan).segment_array
        p0 = pole_of_inaccessibility(corridor_plan.regions[0].polygon)
        noise = NoiseConfig(sigma_move=0.4, sigma_rot=0.3, seed=8)
        st = reset(corridor_plan, AgentPose(p0.x, p0.y, 0.3), p0, noise)
        rng = np.random.default_rng(12)
        for _ in range(300):
            k = int(rng.integers(0, 4))
            a = [Action.move_forward, Action.move_forward,
                 Action.turn_left, Action.turn_right][k]()
            step(st, a)
            d = _min_wall_distance(st.true_pose, walls)
            assert d >= 0.05 - 1e-6

    def test_blocked_agent_stays_put(self, unit_square_plan):
        st = reset(unit_square_plan, pose(0.5, 0.9499999, 0.0), Point2(0.5, 0.5), NoiseConfig())
        step(st, Action.move_forward(0.25))
        assert st.true_pose.y == pytest.approx(0.95, abs=1e-6)

    def test_can_slide_away_after_contact(self, unit_square_plan):
        st = reset(unit_square_plan, pose(0.5, 0.8, 0.0), Point2(0.5, 0.5), NoiseConfig())
        step(st, Action.move_forward(0.25))   # lands at clearance
        for _ in range(12):
            step(st, Action.turn_right(DEG15))  # face -y
        step(st, Action.move_forward(0.25))
        assert st.true_pose.y == pytest.approx(0.70, abs=1e-6)


def _min_wall_distance(p, segs):
    ax, ay, bx, by = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]
    wx, wy = bx - ax, by - ay
    ll = wx * wx + wy * wy
    t = np.clip(((p.x - ax) * wx + (p.y - ay) * wy) / np.where(ll == 0, 1, ll), 0, 1)
    return float(np.min(np.hypot(p.x - (ax + t * wx), p.y - (ay + t * wy))))


class TestMaxFreeTravel:
    def test_no_walls_full_travel(self):
        assert max_free_travel(0, 0, 0, 1, 2.0, np.zeros((0, 4))) == 2.0

    def test_perpendicular_approach(self):
        segs = np.array([[-1.0, 1.0, 1.0, 1.0]])
        t = max_free_travel(0, 0, 0, 1, 5.0, segs)
        assert t == pytest.approx(0.95, abs=1e-6)

    def test_grazing_endpoint_capsule(self):
        # Ray passes 0.02 m from a wall endpoint: must stop before the cap disc.
        segs = np.array([[0.02, 1.0, 5.0, 1.0]])
        t = max_free_travel(0, 0, 0, 1, 5.0, segs)
        d = math.hypot(0.02, 1.0 - t)
        assert d >= 0.05 - 1e-6

    def test_parallel_motion_at_clearance_allowed(self):
        segs = np.array([[-5.0, 0.05, 5.0, 0.05]])
        t = max_free_travel(0, 0, 1, 0, 3.0, segs)
        assert t == pytest.approx(3.0)


class TestNoiseStatistics:
    def test_forward_distance_std(self, open_arena_plan):
        # DERIVED: Monte-Carlo estimate of sigma_move * primitive length.
        noise = NoiseConfig(sigma_move=0.1, seed=21)
        st = reset(open_arena_plan, pose(), Point2(1, 1), noise)
        dists = []
        prev = st.true_pose
        for _ in range(10_000):
            step(st, Action.move_forward())
            dists.append(prev.position.distance_to(st.true_pose.position))
            prev = st.true_pose
            if st.step_count % 1000 == 0:  # re-center to stay far from walls
                st.true_pose = AgentPose(0, 0, st.true_pose.theta)
                prev = st.true_pose
        assert np.std(dists) == pytest.approx(0.025, rel=0.05)

    def test_turn_residual_std(self, open_arena_plan):
        noise = NoiseConfig(sigma_rot=0.05, seed=22)
        st = reset(open_arena_plan, pose(), Point2(1, 1), noise)
        residuals = []
        for _ in range(10_000):
            before = st.true_pose.theta
            step(st, Action.turn_right(DEG15))
            delta = (st.true_pose.theta - before - DEG15 + math.pi) % (2 * math.pi) - math.pi
            residuals.append(delta)
        assert np.std(residuals) == pytest.approx(0.05, rel=0.05)

    def test_drift_defaults_to_tenth_of_move(self):
        assert NoiseConfig(sigma_move=0.3).sigma_drift == pytest.approx(0.03)
        assert NoiseConfig(sigma_move=0.3, sigma_drift=0.2).sigma_drift == 0.2


class TestProjection:
    def test_identity_at_alpha_one(self, open_arena_plan):
        st = reset(open_arena_plan, pose(), Point2(1, 1), NoiseConfig())
        assert project_to_plan(st, Point2(2, 3)) == Point2(2, 3)

    def test_scales_by_alpha(self, open_arena_plan):
        st = reset(open_arena_plan, pose(), Point2(1, 1), NoiseConfig())
        st.scale_alpha = 1.05
        p = project_to_plan(st, Point2(2, 3))
        assert p.x == pytest.approx(2.1)
        assert p.y == pytest.approx(3.15)

    def test_single_alpha_for_whole_trajectory(self, open_arena_plan):
        # DERIVED: per-point ratios all equal the one drawn alpha.
        noise = NoiseConfig(sigma_scale=0.05, seed=77)
        st = reset(open_arena_plan, pose(3, 4, 0.5), Point2(1, 1), noise)
        for _ in range(30):
            step(st, Action.move_forward())
            step(st, Action.turn_right())
        ratios = set()
        for p in st.trajectory:
            proj = project_to_plan(st, p.position)
            if abs(p.x) > 1e-9:
                ratios.add(round(proj.x / p.x, 12))
        assert len(ratios) == 1
        assert ratios.pop() == pytest.approx(st.scale_alpha)


class TestJitter:
    def test_sigma_zero_identity(self, two_room_plan):
        assert jitter_floorplan(two_room_plan, 0.0, 4) is two_room_plan

    def test_same_seed_bit_identical(self, two_room_plan):
        a = jitter_floorplan(two_room_plan, 0.05, 123)
        b = jitter_floorplan(two_room_plan, 0.05, 123)
        assert a == b

    def test_ids_and_types_preserved(self, two_room_plan):
        j = jitter_floorplan(two_room_plan, 0.05, 5)
        assert [(r.region_id, r.region_type) for r in j.regions] == \
            [(r.region_id, r.region_type) for r in two_room_plan.regions]

    def test_displacement_std(self, unit_square_plan):
        # DERIVED: Monte-Carlo over many seeds; per-coordinate std ~= sigma.
        sigma = 0.03
        deltas = []
        for seed in range(2_000):
            j = jitter_floorplan(unit_square_plan, sigma, seed)
            for v, v0 in zip(j.regions[0].polygon.vertices,
                             unit_square_plan.regions[0].polygon.vertices):
                deltas.extend([v.x - v0.x, v.y - v0.y])
        assert np.std(deltas) == pytest.approx(sigma, rel=0.05)

    def test_polygons_stay_simple(self, corridor_plan):
        for seed in range(5):
            j = jitter_floorplan(corridor_plan, 0.05, seed)
            for r in j.regions:
                assert r.polygon.is_simple()


class TestSuccess:
    def test_far_final_fails(self, open_arena_plan):
        st = reset(open_arena_plan, pose(), Point2(3, 4), NoiseConfig())
        step(st, Action.stop())
        assert check_success(st) is False

    def test_near_final_succeeds(self, open_arena_plan):
        st = reset(open_arena_plan, pose(1, 1, 0), Point2(1, 1.5), NoiseConfig())
        step(st, Action.stop())
        assert check_success(st) is True

    def test_exactly_three_meters_fails(self, open_arena_plan):
        st = reset(open_arena_plan, pose(0, 0, 0), Point2(0, 3.0), NoiseConfig())
        step(st, Action.stop())
        assert check_success(st) is False

    def test_before_termination_raises(self, open_arena_plan):
        st = reset(open_arena_plan, pose(), Point2(1, 1), NoiseConfig())
        with pytest.raises(SimulationError):
            check_success(st)


class TestEpisodeResult:
    def test_result_fields(self, open_arena_plan):
        st = reset(open_arena_plan, pose(0, 0, 0), Point2(0, 1.0), NoiseConfig())
        for _ in range(4):
            step(st, Action.move_forward())
        step(st, Action.stop())
        res = episode_result(st, shortest_path_length=1.0)
        assert res.success and res.oracle_success
        assert res.ne == pytest.approx(0.0, abs=1e-12)
        assert res.path_length == pytest.approx(1.0)
        assert res.steps == 5

    def test_oracle_success_without_success(self, open_arena_plan):
        st = reset(open_arena_plan, pose(0, 0, 0), Point2(0, 2.0), NoiseConfig())
        for _ in range(24):
            step(st, Action.move_forward())  # walk 6 m past the goal
        step(st, Action.stop())
        res = episode_result(st, shortest_path_length=2.0)
        assert not res.success
        assert res.oracle_success


class TestTrajectoryLog:
    def test_roundtrip(self, open_arena_plan, tmp_path):
        st = reset(open_arena_plan, pose(), Point2(1, 1), NoiseConfig(sigma_move=0.1, seed=3))
        step(st, Action.move_forward())
        step(st, Action.turn_left())
        step(st, Action.stop())
        path = tmp_path / "log.jsonl"
        write_trajectory_jsonl(st, path)
        records = read_trajectory_jsonl(path)
        assert [r["t"] for r in records] == [0, 1, 2]
        assert records[0]["action"] == "MoveForward"
        assert records[0]["mag"] == 0.25
        assert records[2]["action"] == "Stop"
        assert records[2]["mag"] is None
        assert records[1]["true_pose"] == st.trajectory[2].as_list()
        assert records[1]["believed_pose"] == st.believed_trajectory[2].as_list()

    def test_turn_never_moves_forward_never_turns_without_drift(self, open_arena_plan):
        noise = NoiseConfig(sigma_move=0.2, sigma_rot=0.2, sigma_drift=0.0, seed=6)
        st = reset(open_arena_plan, pose(1, 2, 0.4), Point2(1, 1), noise)
        for i in range(60):
            before = st.true_pose
            if i % 2 == 0:
                step(st, Action.turn_right())
                assert (st.true_pose.x, st.true_pose.y) == (before.x, before.y)
            else:
                step(st, Action.move_forward())
                assert st.true_pose.theta == before.theta
