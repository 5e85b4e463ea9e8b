import json
import math
import sys
import textwrap

import pytest

from floornav.evaluation import AblationSpec, PolicySpec, run_episode
from floornav.evaluation.benchmark import effective_plan
from floornav.evaluation.policies import parse_action_json
from floornav.simulator import ActionKind, NoiseConfig


FORWARD_THEN_STOP = textwrap.dedent("""\
    import json, sys
    for line in sys.stdin:
        msg = json.loads(line)
        if msg["type"] == "reset":
            continue
        if msg["t"] < 12:
            print(json.dumps({"action": "MoveForward", "magnitude": 0.25}), flush=True)
        else:
            print(json.dumps({"action": "Stop", "magnitude": None}), flush=True)
    """)


class TestParseActionJson:
    def test_stop(self):
        a = parse_action_json({"action": "Stop", "magnitude": None})
        assert a.kind is ActionKind.STOP

    def test_defaults_to_primitive(self):
        a = parse_action_json({"action": "TurnLeft"})
        assert a.magnitude == pytest.approx(math.radians(15))

    def test_unknown_action_rejected(self):
        with pytest.raises(KeyError):
            parse_action_json({"action": "Jump"})


class TestExternalPolicy:
    def test_subprocess_policy_drives_episode(self, tmp_path, corridor_plan, corridor_episodes):
        script = tmp_path / "policy.py"
        script.write_text(FORWARD_THEN_STOP, encoding="utf-8")
        spec = PolicySpec(kind="external",
                          external_cmd=(sys.executable, str(script)))
        ep = corridor_episodes[0]
        res = run_episode(ep, corridor_plan, spec, NoiseConfig())
        assert res.steps == 13  # 12 forwards and the stop

    def test_malformed_output_raises(self, tmp_path, corridor_plan, corridor_episodes):
        from floornav.evaluation.policies import PolicyError

        script = tmp_path / "bad.py"
        script.write_text(
            "import sys\n"
            "for line in sys.stdin:\n"
            "    print('not json', flush=True)\n",
            encoding="utf-8")
        spec = PolicySpec(kind="external",
                          external_cmd=(sys.executable, str(script)))
        with pytest.raises(PolicyError, match="malformed action"):
            run_episode(corridor_episodes[0], corridor_plan, spec, NoiseConfig())


class TestJitterAblation:
    def test_jitter_applies_to_policy_facing_plan(self, corridor_plan, corridor_episodes):
        ep = corridor_episodes[0]
        cell = AblationSpec(noise=NoiseConfig(sigma_jitter=0.05, seed=3))
        fp_eff, rect = effective_plan(ep, cell, 0, [corridor_plan])
        assert rect is None
        assert fp_eff != corridor_plan  # vertices perturbed
        assert [(r.region_id, r.region_type) for r in fp_eff.regions] == \
            [(r.region_id, r.region_type) for r in corridor_plan.regions]
        # the simulated world stays the true plan; only the policy's map moves
        assert ep.floorplan == corridor_plan
