"""
Sweep and latency harness.

A sweep fixes a full parameter set (experiment preset plus overrides), varies
one or two named parameters over a grid and plans every grid point. Rows for
the adaptive planner are emitted next to static fixed-depth baselines so the
envelope can be checked from the table alone.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np

from .controller import APCController, Cv, GhzStar, PlanRequest
from .cv import CvState, NlaParams
from .errors import Issue, ValidationError
from .ghz import GhzPassParams
from .physics import DeviceNoise, Protocol
from .planner import Objective, Plan, PlannerConfig, plan_fixed
from .timing import LinkParams, TimingParams, attempt_period

log = logging.getLogger(__name__)


class Experiment(str, Enum):
    GOODPUT_VS_TARGET = "goodput_vs_target"
    NOISE_CLIFF = "noise_cliff"
    T2_THRESHOLD = "t2_threshold"
    DISTANCE_TARGET_GRID = "distance_target_grid"
    PROTOCOL_COMPARE = "protocol_compare"
    GHZ_SCALING = "ghz_scaling"
    CV_NLA = "cv_nla"
    PLANNING_LATENCY = "planning_latency"


BASE_PARAMS: dict[str, Any] = {
    # path
    "hops": 1,
    "length_km": 15.0,
    "f0": 0.85,
    "t2_eff": math.inf,
    "p_bsm": 1.0,
    "p_gen_override": None,
    "bell": None,
    "target_fidelity": 0.85,
    # device
    "eps": None,
    "p1": 0.0,
    "p2": 0.0,
    "p_meas": 0.0,
    "p_det": 0.5,
    "attempt_period": None,
    "t_1q": 1e-6,
    "t_cnot": 1e-6,
    "t_meas": 1e-6,
    "t_classical_per_round": 0.0,
    # planner
    "r_max": 4,
    "frontier_width": 64,
    "objective": Objective.GOODPUT.value,
    "state_model": "werner",
    "gen_agg": "parallel",
    "end_to_end_rounds_max": 0,
    "baselines": "rounds",
    "baseline_rounds": [0, 1, 2, 3],
    # GHZ
    "k": 4,
    "f_anc": 0.99,
    "p_meas_ghz": 0.01,
    "passes": 1,
    # CV
    "squeezing_r": 1.2,
    "eta": 0.85,
    "gain_g": 1.5,
    "stages_k": 2,
    "prefactor_a": None,
    "stage_time": 1e-6,
    "cv_target": 0.5,
    # latency
    "repeats": 3,
}

PRESETS: dict[Experiment, dict[str, Any]] = {
    Experiment.GOODPUT_VS_TARGET: {
        "fixed": {"length_km": 15.0, "f0": 0.85, "t2_eff": 0.1, "eps": 1e-3},
        "axes": [{"name": "target_fidelity", "start": 0.84, "stop": 0.92, "steps": 17}],
    },
    Experiment.NOISE_CLIFF: {
        "fixed": {"hops": 3, "length_km": 8.0, "f0": 0.93, "target_fidelity": 0.85, "t2_eff": 1.0},
        "axes": [{"name": "eps", "start": 1e-4, "stop": 3e-2, "steps": 25, "scale": "log"}],
    },
    Experiment.T2_THRESHOLD: {
        "fixed": {"hops": 3, "length_km": 8.0, "f0": 0.92, "target_fidelity": 0.76},
        "axes": [{"name": "t2_eff", "start": 1e-3, "stop": 1.0, "steps": 31, "scale": "log"}],
    },
    Experiment.DISTANCE_TARGET_GRID: {
        "fixed": {"f0": 0.90, "t2_eff": 0.08, "r_max": 6, "eps": 1e-4},
        "axes": [
            {"name": "length_km", "start": 5.0, "stop": 60.0, "steps": 12},
            {"name": "target_fidelity", "start": 0.86, "stop": 0.93, "steps": 8},
        ],
    },
    Experiment.PROTOCOL_COMPARE: {
        "fixed": {
            "length_km": 15.0, "f0": 0.85, "t2_eff": 0.15, "r_max": 5,
            "state_model": "bell_diagonal", "baselines": "protocols", "baseline_rounds": [1, 2],
        },
        "axes": [{"name": "target_fidelity", "start": 0.84, "stop": 0.91, "steps": 15}],
    },
    Experiment.GHZ_SCALING: {
        "fixed": {"length_km": 12.0, "f0": 0.80, "target_fidelity": 0.85, "t2_eff": 1.0,
                  "baselines": "none"},
        "axes": [{"name": "k", "values": [3, 4, 5, 6, 7, 8]}],
    },
    Experiment.CV_NLA: {
        "fixed": {"squeezing_r": 1.2, "eta": 0.85, "baselines": "none"},
        "axes": [
            {"name": "gain_g", "values": [1.2, 1.5, 2.0]},
            {"name": "stages_k", "values": [0, 1, 2, 3, 4]},
        ],
    },
    Experiment.PLANNING_LATENCY: {
        "fixed": {"length_km": 10.0, "f0": 0.88, "target_fidelity": 0.85, "t2_eff": 1.0,
                  "eps": 1e-4, "baselines": "none"},
        "axes": [{"name": "hops", "values": [1, 10, 100, 1000]}],
    },
}

AXIS_COLUMNS_INT = {"hops", "k", "stages_k", "r_max", "passes"}

COLUMNS = [
    "strategy",
    "selected_rounds",
    "rounds_per_link",
    "selected_protocol",
    "f_end",
    "p_succ",
    "makespan",
    "goodput",
    "feasible",
    "planning_time",
]

TIMING_COLUMNS = ("planning_time",)


@dataclass(frozen=True)
class Axis:
    name: str
    start: Optional[float] = None
    stop: Optional[float] = None
    steps: Optional[int] = None
    scale: str = "linear"
    values: Optional[tuple] = None

    def points(self) -> list:
        if self.values is not None:
            pts = list(self.values)
        elif self.scale == "log":
            pts = np.geomspace(self.start, self.stop, self.steps).tolist()
        else:
            pts = np.linspace(self.start, self.stop, self.steps).tolist()
        if self.name in AXIS_COLUMNS_INT:
            pts = [int(round(v)) for v in pts]
        return pts

    def issues(self, where: str) -> list[Issue]:
        out: list[Issue] = []
        if self.name not in BASE_PARAMS:
            out.append(Issue("UNKNOWN_PARAM", f"{where}.name", f"unknown parameter {self.name!r}"))
        if self.values is not None:
            if len(self.values) == 0:
                out.append(Issue("AXIS", f"{where}.values", "values must be nonempty"))
            return out
        if self.start is None or self.stop is None or self.steps is None:
            out.append(Issue("AXIS", where, "give either values or start, stop and steps"))
            return out
        if int(self.steps) != self.steps or self.steps < 2:
            out.append(Issue("AXIS", f"{where}.steps", "a range needs at least 2 steps"))
        if self.scale not in ("linear", "log"):
            out.append(Issue("AXIS", f"{where}.scale", f"unknown scale {self.scale!r}"))
        elif self.scale == "log" and (self.start <= 0 or self.stop <= 0):
            out.append(Issue("AXIS", where, "log ranges need positive endpoints"))
        return out


@dataclass(frozen=True)
class SweepSpec:
    experiment: Experiment
    fixed_params: Mapping[str, Any] = field(default_factory=dict)
    swept_axes: Optional[Sequence[Axis]] = None  # None: preset axes
    output_path: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "experiment", Experiment(self.experiment))
        if self.swept_axes is not None:
            object.__setattr__(self, "swept_axes", tuple(self.swept_axes))

    @property
    def axes(self) -> tuple[Axis, ...]:
        if self.swept_axes is not None:
            return tuple(self.swept_axes)
        return tuple(axis_from_dict(a) for a in PRESETS[self.experiment]["axes"])

    def resolved_params(self) -> dict[str, Any]:
        params = dict(BASE_PARAMS)
        params.update(PRESETS[self.experiment]["fixed"])
        params.update(self.fixed_params)
        return params

    def validate(self) -> None:
        issues: list[Issue] = []
        for key in self.fixed_params:
            if key not in BASE_PARAMS:
                issues.append(Issue("UNKNOWN_PARAM", f"fixed_params.{key}", "unknown parameter"))
        axes = self.axes
        if not 1 <= len(axes) <= 2:
            issues.append(Issue("AXIS", "swept_axes", "a sweep has one or two axes"))
        for i, ax in enumerate(axes):
            issues.extend(ax.issues(f"swept_axes[{i}]"))
        if len({a.name for a in axes}) != len(axes):
            issues.append(Issue("AXIS", "swept_axes", "axis names must be distinct"))
        if issues:
            raise ValidationError(issues)


def axis_from_dict(d: Mapping) -> Axis:
    values = d.get("values")
    return Axis(
        name=d["name"],
        start=d.get("start"),
        stop=d.get("stop"),
        steps=d.get("steps"),
        scale=d.get("scale", "linear"),
        values=None if values is None else tuple(values),
    )


def spec_from_dict(data: Mapping) -> SweepSpec:
    issues: list[Issue] = []
    try:
        experiment = Experiment(data.get("experiment"))
    except ValueError:
        raise ValidationError([Issue("EXPERIMENT", "experiment",
                                     f"unknown experiment {data.get('experiment')!r}")])
    axes = None
    if data.get("swept_axes") is not None:
        try:
            axes = [axis_from_dict(a) for a in data["swept_axes"]]
        except (KeyError, TypeError) as exc:
            issues.append(Issue("AXIS", "swept_axes", f"malformed axis: {exc}"))
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        issues.append(Issue("TYPE", "seed", "seed must be an integer"))
    if issues:
        raise ValidationError(issues)
    spec = SweepSpec(experiment, dict(data.get("fixed_params", {})), axes,
                     data.get("output_path"), seed)
    spec.validate()
    return spec


# ------------------------------------------------------------------ building

def _inf(v):
    return math.inf if v is None or v == "inf" else float(v)


def build_setup(params: Mapping[str, Any]):
    """Links, timing, noise and planner config for one grid point."""
    link = LinkParams(
        length_km=float(params["length_km"]),
        f0=float(params["bell"][0] if params["bell"] else params["f0"]),
        p_gen_override=params["p_gen_override"],
        p_bsm=float(params["p_bsm"]),
        t2_eff=_inf(params["t2_eff"]),
        bell=None if params["bell"] is None else tuple(float(x) for x in params["bell"]),
    )
    timing = TimingParams(
        t_1q=params["t_1q"], t_cnot=params["t_cnot"], t_meas=params["t_meas"],
        t_classical_per_round=params["t_classical_per_round"],
        attempt_period=params["attempt_period"], p_det=params["p_det"],
    )
    if params["eps"] is not None:
        noise = DeviceNoise.correlated(float(params["eps"]))
    else:
        noise = DeviceNoise(params["p1"], params["p2"], params["p_meas"])
    cfg = PlannerConfig(
        r_max=int(params["r_max"]),
        frontier_width=params["frontier_width"],
        objective=Objective(params["objective"]),
        state_model=params["state_model"],
        gen_agg=params["gen_agg"],
        end_to_end_rounds_max=int(params["end_to_end_rounds_max"]),
    )
    return [link] * int(params["hops"]), timing, noise, cfg


def baseline_assignments(params: Mapping[str, Any]) -> list[tuple[int, Protocol]]:
    kind = params["baselines"]
    rounds = [int(r) for r in params["baseline_rounds"]]
    if kind == "none":
        return []
    if kind == "protocols":
        return [(r, p) for p in Protocol for r in rounds]
    return [(r, Protocol.BBPSSW) for r in rounds]


def _protocol_label(plan: Plan) -> str:
    used = sorted({c.protocol.value for c in plan.per_link if c.rounds > 0})
    return "+".join(used) if used else "none"


def _plan_row(strategy: str, plan: Plan, elapsed: float) -> dict:
    rounds = plan.rounds
    return {
        "strategy": strategy,
        "selected_rounds": max(rounds, default=0),
        "rounds_per_link": "-".join(str(r) for r in rounds),
        "selected_protocol": _protocol_label(plan),
        "f_end": plan.f_end,
        "p_succ": plan.p_succ_path,
        "makespan": plan.makespan,
        "goodput": plan.goodput,
        "feasible": plan.feasible,
        "planning_time": elapsed,
    }


def evaluate_point(experiment: Experiment, params: Mapping[str, Any]) -> list[dict]:
    """Rows (adaptive plan first, then baselines) for one fully resolved grid point."""
    links, timing, noise, cfg = build_setup(params)
    ctl = APCController(cfg, noise, timing)
    target = float(params["target_fidelity"])
    if experiment is Experiment.GHZ_SCALING:
        mode = GhzStar(int(params["k"]),
                       GhzPassParams(params["f_anc"], params["p_meas_ghz"], int(params["passes"])))
        resp = ctl.plan(PlanRequest(links[:1], target, mode=mode))
        g = resp.ghz_result
        arm_rounds = [p.max_rounds for p in g.arm_plans]
        return [{
            "strategy": "apc",
            "selected_rounds": max(arm_rounds),
            "rounds_per_link": "-".join(str(r) for r in arm_rounds),
            "selected_protocol": _protocol_label(g.arm_plans[0]),
            "f_end": g.state.fidelity,
            "p_succ": g.p_succ,
            "makespan": g.makespan,
            "goodput": g.goodput,
            "feasible": g.feasible,
            "planning_time": resp.planning_time,
        }]
    if experiment is Experiment.CV_NLA:
        state = CvState(float(params["squeezing_r"]), float(params["eta"]))
        nla = NlaParams(float(params["gain_g"]), int(params["stages_k"]), params["prefactor_a"],
                        float(params["stage_time"]), float(params["length_km"]))
        resp = ctl.plan(PlanRequest(links, target, mode=Cv(state, nla, params["cv_target"])))
        stage = resp.cv_result.stages[-1]
        period = attempt_period(links[0], timing)
        return [{
            "strategy": "cv-nla",
            "selected_rounds": stage.stages,
            "rounds_per_link": str(stage.stages),
            "selected_protocol": "NLA",
            "f_end": stage.fidelity,
            "p_succ": stage.p_succ,
            "makespan": period + stage.t_cv,
            "goodput": stage.goodput,
            "feasible": stage.feasible,
            "planning_time": resp.planning_time,
        }]
    if experiment is Experiment.PLANNING_LATENCY:
        times = []
        for _ in range(int(params["repeats"])):
            resp = ctl.plan(PlanRequest(links, target))
            times.append(resp.planning_time)
        return [_plan_row("apc", resp.plan, sum(times) / len(times))]

    resp = ctl.plan(PlanRequest(links, target))
    rows = [_plan_row("apc", resp.plan, resp.planning_time)]
    for r, proto in baseline_assignments(params):
        t0 = time.perf_counter()
        static = plan_fixed(links, [(r, proto)] * len(links), timing, noise, cfg, target)
        rows.append(_plan_row(f"static-r{r}-{proto.value}", static, time.perf_counter() - t0))
    return rows


def run_sweep(spec: SweepSpec) -> list[dict]:
    """Evaluate every grid point; rows are ordered by grid position then strategy."""
    spec.validate()
    params = spec.resolved_params()
    axes = spec.axes
    grids = [ax.points() for ax in axes]
    rows: list[dict] = []
    total = math.prod(len(g) for g in grids)
    for n, point in enumerate(product(*grids), 1):
        local = dict(params)
        local.update({ax.name: v for ax, v in zip(axes, point)})
        log.info("%s point %d/%d %s", spec.experiment.value, n, total,
                 ", ".join(f"{ax.name}={v!r}" for ax, v in zip(axes, point)))
        for row in evaluate_point(spec.experiment, local):
            rows.append({**{ax.name: v for ax, v in zip(axes, point)}, **row})
    if spec.output_path:
        write_outputs(spec, rows, spec.output_path)
    return rows


# -------------------------------------------------------------------- output

def columns_for(spec: SweepSpec) -> list[str]:
    return [ax.name for ax in spec.axes] + COLUMNS


def _cell(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: Iterable[Mapping], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def _json_value(v: Any) -> Any:
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def rows_to_json(rows: Iterable[Mapping], columns: Sequence[str]) -> str:
    data = [{c: _json_value(row[c]) for c in columns} for row in rows]
    return json.dumps({"columns": list(columns), "rows": data}, indent=2) + "\n"


def manifest(spec: SweepSpec) -> dict:
    return {
        "experiment": spec.experiment.value,
        "seed": spec.seed,
        "params": {k: _json_value(v) for k, v in sorted(spec.resolved_params().items())},
        "swept_axes": [
            {"name": a.name, "points": [_json_value(p) for p in a.points()]} for a in spec.axes
        ],
        "columns": columns_for(spec),
        "timing_columns": list(TIMING_COLUMNS),
    }


def write_outputs(spec: SweepSpec, rows: list[dict], path: str | Path, fmt: str = "csv") -> Path:
    """Write the table and an adjacent ``<name>.manifest.json``."""
    path = Path(path)
    cols = columns_for(spec)
    text = rows_to_csv(rows, cols) if fmt == "csv" else rows_to_json(rows, cols)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
        mpath = path.with_name(path.stem + ".manifest.json")
        mpath.write_text(json.dumps(manifest(spec), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write sweep output to {path}: {exc}") from exc
    return path


def data_rows(rows: Iterable[Mapping], exclude: Sequence[str] = TIMING_COLUMNS) -> list[tuple]:
    """Rows with timing columns removed, for reproducibility comparisons."""
    return [tuple(_cell(v) for k, v in row.items() if k not in exclude) for row in rows]


# ------------------------------------------------------------------- latency

def bench_latency(
    chain_lengths: Sequence[int] = (1, 10, 100, 1000),
    repeats: int = 3,
    frontier_width: Optional[int] = 64,
    fixed_params: Mapping[str, Any] | None = None,
) -> list[dict]:
    """Mean wall-clock planning time per chain length on homogeneous chains."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    params = dict(BASE_PARAMS)
    params.update(PRESETS[Experiment.PLANNING_LATENCY]["fixed"])
    params["frontier_width"] = frontier_width
    params.update(fixed_params or {})
    out = []
    for n in chain_lengths:
        links, timing, noise, cfg = build_setup({**params, "hops": int(n)})
        ctl = APCController(cfg, noise, timing)
        req = PlanRequest(links, float(params["target_fidelity"]))
        times = []
        for _ in range(repeats):
            resp = ctl.plan(req)
            times.append(resp.planning_time)
        mean = sum(times) / repeats
        log.info("latency n=%d mean=%.4fs", n, mean)
        out.append({
            "length": int(n),
            "mean_planning_time": mean,
            "per_link_time": mean / n,
            "feasible": resp.plan.feasible,
        })
    return out


LATENCY_COLUMNS = ["length", "mean_planning_time", "per_link_time", "feasible"]
