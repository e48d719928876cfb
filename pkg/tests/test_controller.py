import json
import math

import pytest

from apc.controller import (
    APCController,
    Bipartite,
    Cv,
    GhzStar,
    PlanRequest,
    plan,
    request_from_dict,
    response_to_dict,
    validate_request,
)
from apc.cv import CvState, NlaParams, cv_fidelity_proxy
from apc.errors import ValidationError
from apc.ghz import GhzPassParams, ghz_from_arms
from apc.physics import DeviceNoise
from apc.planner import PlannerConfig, plan_path
from apc.timing import LinkParams, TimingParams


def link(**kw):
    base = dict(length_km=10.0, f0=0.9, p_gen_override=1.0)
    base.update(kw)
    return LinkParams(**base)


def codes(request):
    with pytest.raises(ValidationError) as info:
        validate_request(request)
    return set(info.value.codes)


def test_bipartite_ideal_link():
    resp = plan(PlanRequest([link()], 0.85))
    assert resp.plan.feasible and resp.plan.rounds == (0,)
    assert resp.planning_time >= 0
    assert len(resp.per_link_details) == 1


@pytest.mark.parametrize("request_,code", [
    (PlanRequest([], 0.8), "EMPTY_PATH"),
    (PlanRequest([link()], 0.0), "TARGET_RANGE"),
    (PlanRequest([link()], 1.2), "TARGET_RANGE"),
    (PlanRequest([link(t2_eff=-1.0)], 0.8), "NEGATIVE_TIME"),
    (PlanRequest([link(p_bsm=1.5)], 0.8), "PROB_RANGE"),
    (PlanRequest([link(p_gen_override=-0.1)], 0.8), "PROB_RANGE"),
    (PlanRequest([link(length_km=0.0)], 0.8), "LENGTH"),
    (PlanRequest([link(f0=1.3)], 0.8), "FIDELITY_RANGE"),
    (PlanRequest([link()] * 2, 0.8, mode=GhzStar(4)), "ARM_COUNT"),
])
def test_validation_codes(request_, code):
    assert code in codes(request_)


def test_validation_codes_are_distinct():
    seen = {
        frozenset(codes(PlanRequest([], 0.8))),
        frozenset(codes(PlanRequest([link()], 0.0))),
        frozenset(codes(PlanRequest([link(t2_eff=-1.0)], 0.8))),
        frozenset(codes(PlanRequest([link(p_bsm=2.0)], 0.8))),
    }
    assert len(seen) == 4


def test_validation_lists_every_field():
    with pytest.raises(ValidationError) as info:
        validate_request(PlanRequest([link(f0=2.0, p_bsm=0.0)], 1.5))
    fields = {i.field for i in info.value.issues}
    assert fields == {"path[0].f0", "path[0].p_bsm", "target_fidelity"}


def test_ghz_star_arms_planned_independently():
    arm = LinkParams(12.0, 0.80, t2_eff=1.0)
    resp = APCController().plan(PlanRequest([arm], 0.85, mode=GhzStar(4, GhzPassParams(0.99, 0.01))))
    ghz = resp.ghz_result
    assert len(ghz.arm_plans) == 3
    single = plan_path([arm], TimingParams(), DeviceNoise(), PlannerConfig(), 0.85)
    assert all(p == single for p in ghz.arm_plans)
    assert all(p.feasible and max(p.rounds) >= 1 for p in ghz.arm_plans)
    fused = ghz_from_arms([single.f_end] * 3, n_parties=4)
    assert ghz.state.n_parties == 4
    assert ghz.state.fidelity >= fused.fidelity
    assert ghz.p_succ == pytest.approx(single.p_succ_path ** 3 * ghz.pass_p_succ)
    assert ghz.goodput == pytest.approx(ghz.p_succ / ghz.makespan)


def test_unreachable_target_returns_closest_plan():
    noisy = DeviceNoise.correlated(0.02)
    resp = plan(PlanRequest([LinkParams(10.0, 0.8, p_gen_override=1.0)], 0.999),
                PlannerConfig(r_max=4), noisy)
    assert not resp.plan.feasible and resp.plan.goodput == 0.0
    assert resp.plan.per_link and resp.plan.f_end < 0.999


def test_plan_is_deterministic():
    req = PlanRequest([LinkParams(15.0, 0.85, t2_eff=0.1), LinkParams(8.0, 0.9, t2_eff=0.1)], 0.8)
    a, b = plan(req), plan(req)
    a.planning_time = b.planning_time = 0.0
    assert a == b


def test_cv_mode_picks_feasible_stage():
    state = CvState(1.2, 0.85)
    resp = plan(PlanRequest([link()], 0.8, mode=Cv(state, NlaParams(1.5, 3), cv_target=0.9)))
    cv = resp.cv_result
    assert [s.stages for s in cv.stages] == [0, 1, 2, 3]
    assert cv.stages[0].fidelity == pytest.approx(cv_fidelity_proxy(state))
    assert not cv.stages[0].feasible
    assert cv.best.feasible and cv.best.stages == 1


def test_request_from_dict_round_trip():
    data = {
        "path": [{"length_km": 15, "f0": 0.85, "t2_eff": "inf"}, {"length_km": 5, "f0": 0.9}],
        "target_fidelity": 0.8,
        "objective": "min_time_then_cost",
        "noise": {"eps": 1e-3},
        "timing": {"p_det": 0.5},
        "planner": {"r_max": 3},
    }
    resolved = request_from_dict(data, {"frontier_width": 16})
    assert resolved.cfg.r_max == 3 and resolved.cfg.frontier_width == 16
    assert resolved.noise.p2 == 1e-3 and resolved.timing.p_det == 0.5
    assert math.isinf(resolved.request.path[0].t2_eff)
    out = response_to_dict(resolved.run())
    json.dumps(out)
    assert set(out) >= {"plan", "per_link_details", "planning_time"}


@pytest.mark.parametrize("data,code", [
    ({"path": [], "target_fidelity": 0.8}, "EMPTY_PATH"),
    ({"path": [{"length_km": 1}], "target_fidelity": 0.8}, "MISSING"),
    ({"path": [{"length_km": 1, "f0": "x"}], "target_fidelity": 0.8}, "TYPE"),
    ({"path": [{"length_km": 1, "f0": 0.9}], "target_fidelity": 0.8, "colour": 1}, "UNKNOWN_FIELD"),
    ({"path": [{"length_km": 1, "f0": 0.9}], "target_fidelity": 0.8, "objective": "fast"}, "OBJECTIVE"),
    ({"path": [{"length_km": 1, "f0": 0.9}], "target_fidelity": 0.8, "mode": {"type": "w"}}, "MODE"),
    ({"path": [{"length_km": 1, "f0": 0.9}], "target_fidelity": 0.8, "noise": {"p2": 2}}, "PROB_RANGE"),
    ({"path": [{"length_km": 1, "f0": 0.9}], "target_fidelity": 0.8,
      "timing": {"t_cnot": -1}}, "NEGATIVE_TIME"),
    ({"path": [{"length_km": 1, "f0": 0.9}]}, "MISSING"),
])
def test_request_from_dict_errors(data, code):
    with pytest.raises(ValidationError) as info:
        request_from_dict(data)
    assert code in info.value.codes


def test_dict_modes():
    ghz = request_from_dict({
        "path": [{"length_km": 12, "f0": 0.8}], "target_fidelity": 0.85,
        "mode": {"type": "ghz_star", "k": 3, "f_anc": 0.99, "p_meas_ghz": 0.01},
    })
    assert isinstance(ghz.request.mode, GhzStar) and ghz.request.mode.k == 3
    cv = request_from_dict({
        "path": [{"length_km": 12, "f0": 0.8}], "target_fidelity": 0.85,
        "mode": {"type": "cv", "squeezing_r": 1.2, "transmissivity_eta": 0.85, "gain_g": 1.5,
                 "stages_k": 2},
    })
    assert isinstance(cv.request.mode, Cv) and cv.request.mode.nla.stages_k == 2
    assert isinstance(request_from_dict({"path": [{"length_km": 1, "f0": 0.9}],
                                         "target_fidelity": 0.8}).request.mode, Bipartite)
