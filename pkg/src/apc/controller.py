"""
Public planning facade.

``APCController.plan`` validates a request, runs the path planner and,
depending on the request mode, a GHZ or CV post-stage. Requests can also be
built from plain dictionaries (the JSON schema used by the CLI) with
``request_from_dict``; every offending field is reported at once.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Mapping, Optional, Sequence, Union

from .cv import CvState, NlaParams, cv_fidelity_proxy, nla_apply
from .errors import Issue, ValidationError
from .ghz import GhzPassParams, GhzState, ghz_from_arms, ghz_multi_pass
from .physics import DeviceNoise, GateCounts
from .planner import (
    LinkOutcome,
    Objective,
    Plan,
    PlannerConfig,
    plan_path,
)
from .timing import LinkParams, TimingParams, attempt_period


@dataclass(frozen=True)
class Bipartite:
    pass


@dataclass(frozen=True)
class GhzStar:
    """k parties around a hub; the hub is one of the parties, so k-1 arms."""

    k: int
    params: GhzPassParams = GhzPassParams()
    ghz_target: Optional[float] = None


@dataclass(frozen=True)
class Cv:
    state: CvState
    nla: NlaParams = NlaParams()
    cv_target: Optional[float] = None


Mode = Union[Bipartite, GhzStar, Cv]


@dataclass(frozen=True)
class PlanRequest:
    path: tuple[LinkParams, ...]
    target_fidelity: float
    source: str = "src"
    destination: str = "dst"
    objective: Objective = Objective.GOODPUT
    mode: Mode = Bipartite()

    def __post_init__(self):
        object.__setattr__(self, "path", tuple(self.path))


@dataclass(frozen=True)
class GhzResult:
    state: GhzState
    arm_fidelities: tuple[float, ...]
    p_succ: float
    pass_p_succ: float
    ancillas: int
    makespan: float
    goodput: float
    feasible: bool
    arm_plans: tuple[Plan, ...] = ()


@dataclass(frozen=True)
class CvStageResult:
    stages: int
    fidelity: float
    p_succ: float
    c_cv: float
    t_cv: float
    r_eff: float
    goodput: float
    feasible: bool


@dataclass(frozen=True)
class CvResult:
    best: CvStageResult
    stages: tuple[CvStageResult, ...]


@dataclass
class PlanResponse:
    plan: Plan
    per_link_details: list[LinkOutcome]
    ghz_result: Optional[GhzResult] = None
    cv_result: Optional[CvResult] = None
    planning_time: float = 0.0


# ----------------------------------------------------------------- validation

def _prob_issue(issues, name, v, lo_open=False):
    if v is None:
        return
    bad = not isinstance(v, (int, float)) or math.isnan(v) or v > 1.0 or v < 0.0
    if not bad and lo_open and v == 0.0:
        bad = True
    if bad:
        rng = "(0, 1]" if lo_open else "[0, 1]"
        issues.append(Issue("PROB_RANGE", name, f"{v!r} outside {rng}"))


def _time_issue(issues, name, v, positive=False):
    if v is None:
        return
    if not isinstance(v, (int, float)) or math.isnan(v) or v < 0 or (positive and v == 0):
        issues.append(Issue("NEGATIVE_TIME", name, f"{v!r} must be {'> 0' if positive else '>= 0'}"))


def _link_issues(link: LinkParams, i: int) -> list[Issue]:
    issues: list[Issue] = []
    pre = f"path[{i}]"
    if not (link.length_km > 0):
        issues.append(Issue("LENGTH", f"{pre}.length_km", f"{link.length_km!r} must be > 0"))
    if not (0.0 <= link.f0 <= 1.0):
        issues.append(Issue("FIDELITY_RANGE", f"{pre}.f0", f"{link.f0!r} outside [0, 1]"))
    _prob_issue(issues, f"{pre}.p_gen_override", link.p_gen_override, lo_open=True)
    _prob_issue(issues, f"{pre}.p_bsm", link.p_bsm, lo_open=True)
    _time_issue(issues, f"{pre}.t2_eff", link.t2_eff, positive=True)
    if link.bell is not None:
        bell = tuple(link.bell)
        if len(bell) != 4 or any(x < 0 for x in bell) or abs(sum(bell) - 1.0) > 1e-12:
            issues.append(Issue("BELL_STATE", f"{pre}.bell", f"{bell!r} is not a probability vector"))
    return issues


def validate_request(request: PlanRequest) -> None:
    """Raise ``ValidationError`` listing every problem with ``request``."""
    issues: list[Issue] = []
    if not request.path:
        issues.append(Issue("EMPTY_PATH", "path", "at least one link is required"))
    for i, link in enumerate(request.path):
        issues.extend(_link_issues(link, i))
    F = request.target_fidelity
    if not isinstance(F, (int, float)) or not (0.0 < F <= 1.0):
        issues.append(Issue("TARGET_RANGE", "target_fidelity", f"{F!r} outside (0, 1]"))
    mode = request.mode
    if isinstance(mode, GhzStar):
        if mode.k < 3:
            issues.append(Issue("PARAM_RANGE", "mode.k", "a GHZ star needs k >= 3 parties"))
        elif len(request.path) not in (1, mode.k - 1):
            issues.append(Issue(
                "ARM_COUNT", "path", f"expected 1 or {mode.k - 1} arm links, got {len(request.path)}"
            ))
        if mode.ghz_target is not None and not (0.0 < mode.ghz_target <= 1.0):
            issues.append(Issue("TARGET_RANGE", "mode.ghz_target", f"{mode.ghz_target!r} outside (0, 1]"))
    elif isinstance(mode, Cv):
        if mode.cv_target is not None and not (0.0 < mode.cv_target <= 1.0):
            issues.append(Issue("TARGET_RANGE", "mode.cv_target", f"{mode.cv_target!r} outside (0, 1]"))
    elif not isinstance(mode, Bipartite):
        issues.append(Issue("MODE", "mode", f"unknown mode {mode!r}"))
    if issues:
        raise ValidationError(issues)


# --------------------------------------------------------------- controller

class APCController:
    """Stateless planner facade holding the device, timing and planner settings."""

    def __init__(self, cfg: PlannerConfig | None = None, noise: DeviceNoise | None = None,
                 timing: TimingParams | None = None):
        self.cfg = cfg or PlannerConfig()
        self.noise = noise or DeviceNoise()
        self.timing = timing or TimingParams()

    def plan(self, request: PlanRequest) -> PlanResponse:
        validate_request(request)
        t0 = time.perf_counter()
        cfg = replace(self.cfg, objective=Objective(request.objective))
        mode = request.mode
        ghz_res = cv_res = None
        if isinstance(mode, GhzStar):
            plan, ghz_res = self._plan_star(request, mode, cfg)
        else:
            plan = plan_path(request.path, self.timing, self.noise, cfg, request.target_fidelity)
            if isinstance(mode, Cv):
                cv_res = self._cv_stage(request, mode)
        elapsed = time.perf_counter() - t0
        return PlanResponse(plan, list(plan.per_link_outcomes), ghz_res, cv_res, elapsed)

    def _plan_star(self, request: PlanRequest, mode: GhzStar, cfg: PlannerConfig):
        arms = list(request.path) * (mode.k - 1) if len(request.path) == 1 else list(request.path)
        # identical arms have identical plans; plan each distinct link once
        cache: dict[LinkParams, Plan] = {}
        arm_plans = []
        for link in arms:
            if link not in cache:
                cache[link] = plan_path([link], self.timing, self.noise, cfg, request.target_fidelity)
            arm_plans.append(cache[link])
        fids = [p.f_end for p in arm_plans]
        state = ghz_from_arms(fids, n_parties=mode.k)
        farthest = max(link.length_km for link in arms)
        multi = ghz_multi_pass(state, mode.params, self.timing, farthest)
        p_arms = math.prod(p.p_succ_path for p in arm_plans)
        makespan = max(p.makespan for p in arm_plans) + multi.time
        feasible = all(p.feasible for p in arm_plans) and multi.feasible
        if mode.ghz_target is not None:
            feasible = feasible and multi.state.fidelity >= mode.ghz_target
        p_total = p_arms * multi.p_succ
        goodput = p_total / makespan if feasible and makespan > 0 else 0.0
        res = GhzResult(
            state=multi.state,
            arm_fidelities=tuple(fids),
            p_succ=p_total,
            pass_p_succ=multi.p_succ,
            ancillas=multi.ancillas,
            makespan=makespan,
            goodput=goodput,
            feasible=feasible,
            arm_plans=tuple(arm_plans),
        )
        # the bipartite plan reported for a star is its weakest arm
        weakest = min(arm_plans, key=lambda p: (p.feasible, p.goodput, p.f_end))
        return weakest, res

    def _cv_stage(self, request: PlanRequest, mode: Cv) -> CvResult:
        target = request.target_fidelity if mode.cv_target is None else mode.cv_target
        period = attempt_period(request.path[0], self.timing)
        rows = []
        for K in range(mode.nla.stages_k + 1):
            res = nla_apply(mode.state, replace(mode.nla, stages_k=K), self.timing)
            f = cv_fidelity_proxy(res.state)
            ok = f >= target
            denom = period + res.t_cv
            good = res.p_succ / denom if ok and denom > 0 else 0.0
            rows.append(CvStageResult(K, f, res.p_succ, res.c_cv, res.t_cv, res.r_eff, good, ok))
        best = max(rows, key=lambda r: (r.feasible, r.goodput, r.fidelity, -r.stages))
        return CvResult(best, tuple(rows))


def plan(request: PlanRequest, cfg: PlannerConfig | None = None, noise: DeviceNoise | None = None,
         timing: TimingParams | None = None) -> PlanResponse:
    return APCController(cfg, noise, timing).plan(request)


# ------------------------------------------------------------ dict schema

def _num(v: Any) -> Any:
    if v is None:
        return None
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity"):
        return math.inf
    return v


def _known(cls, data: Mapping, where: str, issues: list[Issue]) -> dict:
    names = {f.name for f in fields(cls)}
    extra = set(data) - names
    for key in sorted(extra):
        issues.append(Issue("UNKNOWN_FIELD", f"{where}.{key}", "unrecognised field"))
    return {k: _num(v) for k, v in data.items() if k in names}


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _type_check(kw: dict, where: str, issues: list[Issue], allow: Sequence[str] = ()) -> bool:
    ok = True
    for k, v in kw.items():
        if k in allow or v is None:
            continue
        if not _is_num(v):
            issues.append(Issue("TYPE", f"{where}.{k}", f"{v!r} is not a number"))
            ok = False
    return ok


def timing_from_dict(data: Mapping, issues: list[Issue]) -> Optional[TimingParams]:
    kw = _known(TimingParams, data, "timing", issues)
    if not _type_check(kw, "timing", issues):
        return None
    for name in ("t_1q", "t_cnot", "t_meas", "t_classical_per_round", "attempt_period"):
        _time_issue(issues, f"timing.{name}", kw.get(name))
    if "speed_of_light_fiber" in kw and not kw["speed_of_light_fiber"] > 0:
        issues.append(Issue("PARAM_RANGE", "timing.speed_of_light_fiber", "must be > 0"))
    if "attenuation_db_per_km" in kw and kw["attenuation_db_per_km"] < 0:
        issues.append(Issue("PARAM_RANGE", "timing.attenuation_db_per_km", "must be >= 0"))
    _prob_issue(issues, "timing.p_det", kw.get("p_det"), lo_open=True)
    if any(i.field.startswith("timing.") for i in issues):
        return None
    return TimingParams(**kw)


def noise_from_dict(data: Mapping, issues: list[Issue]) -> Optional[DeviceNoise]:
    if "eps" in data:
        data = {"p1": data["eps"], "p2": data["eps"], "p_meas": data["eps"],
                **{k: v for k, v in data.items() if k != "eps"}}
    kw = _known(DeviceNoise, data, "noise", issues)
    if not _type_check(kw, "noise", issues):
        return None
    for name, v in kw.items():
        _prob_issue(issues, f"noise.{name}", v)
    if any(i.field.startswith("noise.") for i in issues):
        return None
    return DeviceNoise(**kw)


def planner_from_dict(data: Mapping, issues: list[Issue]) -> Optional[PlannerConfig]:
    data = dict(data)
    for key in ("round_counts", "swap_counts"):
        if key in data:
            try:
                data[key] = GateCounts(**data[key])
            except (TypeError, ValueError) as exc:
                issues.append(Issue("PARAM_RANGE", f"planner.{key}", str(exc)))
                return None
    kw = _known(PlannerConfig, data, "planner", issues)
    try:
        return PlannerConfig(**kw)
    except (TypeError, ValueError) as exc:
        issues.append(Issue("PARAM_RANGE", "planner", str(exc)))
        return None


def link_from_dict(data: Mapping, i: int, issues: list[Issue]) -> Optional[LinkParams]:
    where = f"path[{i}]"
    if not isinstance(data, Mapping):
        issues.append(Issue("TYPE", where, "link must be an object"))
        return None
    kw = _known(LinkParams, data, where, issues)
    for req in ("length_km", "f0"):
        if req not in kw and not (req == "f0" and kw.get("bell") is not None):
            issues.append(Issue("MISSING", f"{where}.{req}", "required"))
    if not _type_check(kw, where, issues, allow=("bell",)):
        return None
    if kw.get("t2_eff") is None:
        kw.pop("t2_eff", None)
    if kw.get("bell") is not None:
        bell = kw["bell"]
        if not isinstance(bell, Sequence) or len(bell) != 4 or not all(_is_num(x) for x in bell):
            issues.append(Issue("BELL_STATE", f"{where}.bell", "expected four numbers"))
            return None
        kw["bell"] = tuple(float(x) for x in bell)
        kw.setdefault("f0", kw["bell"][0])
    if "length_km" not in kw or "f0" not in kw:
        return None
    return LinkParams(**kw)


def _mode_from_dict(data: Mapping, issues: list[Issue]) -> Optional[Mode]:
    kind = str(data.get("type", "bipartite")).lower()
    rest = {k: _num(v) for k, v in data.items() if k != "type"}
    try:
        if kind == "bipartite":
            return Bipartite()
        if kind in ("ghz", "ghz_star"):
            k = rest.pop("k")
            target = rest.pop("ghz_target", None)
            return GhzStar(int(k), GhzPassParams(**rest), target)
        if kind == "cv":
            target = rest.pop("cv_target", None)
            state = CvState(rest.pop("squeezing_r"), rest.pop("transmissivity_eta", 1.0))
            return Cv(state, NlaParams(**rest), target)
    except KeyError as exc:
        issues.append(Issue("MISSING", f"mode.{exc.args[0]}", "required"))
        return None
    except (TypeError, ValueError) as exc:
        issues.append(Issue("PARAM_RANGE", "mode", str(exc)))
        return None
    issues.append(Issue("MODE", "mode.type", f"unknown mode {kind!r}"))
    return None


@dataclass
class ResolvedRequest:
    request: PlanRequest
    cfg: PlannerConfig
    noise: DeviceNoise
    timing: TimingParams

    def run(self) -> PlanResponse:
        return APCController(self.cfg, self.noise, self.timing).plan(self.request)


def request_from_dict(data: Mapping, overrides: Mapping | None = None) -> ResolvedRequest:
    """Parse the JSON request schema; raises ``ValidationError`` with every issue."""
    issues: list[Issue] = []
    if not isinstance(data, Mapping):
        raise ValidationError([Issue("TYPE", "request", "request must be a JSON object")])
    known = {"path", "source", "destination", "target_fidelity", "objective", "mode",
             "noise", "timing", "planner"}
    for key in sorted(set(data) - known):
        issues.append(Issue("UNKNOWN_FIELD", key, "unrecognised field"))
    raw_path = data.get("path") or []
    if not isinstance(raw_path, list):
        issues.append(Issue("TYPE", "path", "path must be a list of links"))
        raw_path = []
    links = [link_from_dict(d, i, issues) for i, d in enumerate(raw_path)]
    timing = timing_from_dict(data.get("timing", {}), issues)
    noise = noise_from_dict(data.get("noise", {}), issues)
    pdata = dict(data.get("planner", {}))
    pdata.update(overrides or {})
    cfg = planner_from_dict(pdata, issues)
    mode = _mode_from_dict(data.get("mode", {}), issues)
    target = data.get("target_fidelity")
    if target is None:
        issues.append(Issue("MISSING", "target_fidelity", "required"))
    elif not _is_num(target):
        issues.append(Issue("TYPE", "target_fidelity", f"{target!r} is not a number"))
        target = None
    try:
        objective = Objective(data.get("objective", Objective.GOODPUT.value))
    except ValueError:
        issues.append(Issue("OBJECTIVE", "objective", f"unknown objective {data.get('objective')!r}"))
        objective = Objective.GOODPUT
    req = None
    if all(link is not None for link in links) and target is not None and mode is not None:
        req = PlanRequest(tuple(links), float(target), str(data.get("source", "src")),
                          str(data.get("destination", "dst")), objective, mode)
        try:
            validate_request(req)
        except ValidationError as exc:
            issues.extend(exc.issues)
    elif not raw_path:
        issues.append(Issue("EMPTY_PATH", "path", "at least one link is required"))
    if issues:
        raise ValidationError(issues)
    return ResolvedRequest(req, cfg, noise, timing)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def plan_to_dict(plan: Plan) -> dict:
    return _jsonable({
        "per_link": [
            {"link_index": c.link_index, "rounds": c.rounds, "protocol": c.protocol.value}
            for c in plan.per_link
        ],
        "end_to_end_rounds": plan.end_to_end_rounds,
        "f_end": plan.f_end,
        "p_succ_path": plan.p_succ_path,
        "makespan": plan.makespan,
        "c_pairs_path": plan.c_pairs_path,
        "feasible": plan.feasible,
        "goodput": plan.goodput,
        "target_fidelity": plan.target_fidelity,
    })


def response_to_dict(resp: PlanResponse) -> dict:
    out = {
        "plan": plan_to_dict(resp.plan),
        "per_link_details": [_jsonable(asdict(o)) for o in resp.per_link_details],
        "planning_time": resp.planning_time,
    }
    if resp.plan.frontier:
        out["pareto_set"] = [plan_to_dict(p) for p in resp.plan.frontier]
    if resp.ghz_result is not None:
        g = resp.ghz_result
        out["ghz_result"] = _jsonable({
            "n_parties": g.state.n_parties,
            "fidelity": g.state.fidelity,
            "arm_fidelities": list(g.arm_fidelities),
            "p_succ": g.p_succ,
            "pass_p_succ": g.pass_p_succ,
            "ancillas": g.ancillas,
            "makespan": g.makespan,
            "goodput": g.goodput,
            "feasible": g.feasible,
        })
    if resp.cv_result is not None:
        out["cv_result"] = _jsonable({
            "best": asdict(resp.cv_result.best),
            "stages": [asdict(s) for s in resp.cv_result.stages],
        })
    return out
