"""
Frontier-based dynamic programming over per-hop purification choices.

Each hop contributes a small design space of (rounds, protocol) options.
Partial plans are extended hop by hop, composed through entanglement
swapping, and pruned to a bounded set of non-dominated candidates.

Time model used by the planner (all quantities are expectations):

* A hop with ``r`` rounds needs ``2**r`` raw pairs, generated on ``2**r``
  memory slots in parallel; the path-level generation time is the expected
  maximum of all geometric attempt counts along the path, times the slowest
  attempt period, plus the longest purification schedule.
* Pairs are swapped as soon as their neighbours are ready; a stored pair
  relaxes toward 1/4 with the path's shortest coherence time while it waits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError
from .physics import (
    ROUND_COUNTS,
    SWAP_COUNTS,
    BellDiagonal,
    DeviceNoise,
    GateCounts,
    Protocol,
    WernerPair,
    decay_factor,
    decohere_state,
    multi_round,
    round_reliability,
)
from .timing import (
    LinkParams,
    TimingParams,
    attempt_period,
    classical_rtt,
    expected_max_attempts,
    gen_success_prob,
    round_time,
    swap_time,
)

_TOL = 1e-12
_TRUNC = 1e-13


class Objective(str, Enum):
    GOODPUT = "goodput"
    MIN_TIME_THEN_COST = "min_time_then_cost"
    MIN_COST_THEN_TIME = "min_cost_then_time"
    PARETO_SET = "pareto_set"


class GenAgg(str, Enum):
    PARALLEL = "parallel"
    SEQUENTIAL = "sequential"


@dataclass(frozen=True)
class PlannerConfig:
    r_max: int = 4
    frontier_width: Optional[int] = 64  # None: unbounded
    f_min_local: float = 0.0
    objective: Objective = Objective.GOODPUT
    gen_agg: GenAgg = GenAgg.PARALLEL
    end_to_end_rounds_max: int = 0
    state_model: str = "werner"
    protocol_mode: str = "both"  # or "policy": only the policy's protocol
    round_counts: GateCounts = ROUND_COUNTS
    swap_counts: GateCounts = SWAP_COUNTS
    policy_delta: float = 0.05
    policy_p2_threshold: float = 0.01
    max_series_terms: int = 50_000

    def __post_init__(self):
        if self.r_max < 0:
            raise DomainError("r_max must be >= 0")
        if self.frontier_width is not None and self.frontier_width < 1:
            raise DomainError("frontier_width must be >= 1")
        if self.end_to_end_rounds_max < 0:
            raise DomainError("end_to_end_rounds_max must be >= 0")
        if self.state_model not in ("werner", "bell_diagonal"):
            raise DomainError(f"unknown state_model {self.state_model!r}")
        if self.protocol_mode not in ("both", "policy"):
            raise DomainError(f"unknown protocol_mode {self.protocol_mode!r}")
        object.__setattr__(self, "objective", Objective(self.objective))
        object.__setattr__(self, "gen_agg", GenAgg(self.gen_agg))

    @property
    def width(self) -> float:
        return math.inf if self.frontier_width is None else self.frontier_width


@dataclass(frozen=True, order=True)
class LinkChoice:
    link_index: int
    rounds: int
    protocol: Protocol


@dataclass(frozen=True)
class LinkOutcome:
    f_out: float
    p_succ: float
    c_pairs: float
    time: float
    gen_time: float = 0.0
    pur_time: float = 0.0
    n_generators: int = 1
    p_gen: float = 1.0
    period: float = 0.0


Option = tuple[LinkChoice, LinkOutcome]


# --------------------------------------------------------------------- policy

def select_protocol_policy(
    link: LinkParams,
    noise: DeviceNoise | None = None,
    state_model: str = "werner",
    delta: float = 0.05,
    p2_threshold: float = 0.01,
) -> Protocol:
    """Protocol bias for one hop.

    Werner-like raw states lean to BBPSSW; visible Bell-diagonal asymmetry
    (spread of the error coefficients above ``delta``) or two-qubit error above
    ``p2_threshold`` lean to DEJMPS.
    """
    if noise is not None and noise.p2 > p2_threshold:
        return Protocol.DEJMPS
    if link.bell is not None and BellDiagonal(*link.bell).asymmetry() > delta:
        return Protocol.DEJMPS
    return Protocol.BBPSSW


# ------------------------------------------------------------ link evaluation

def evaluate_link(
    link: LinkParams,
    rounds: int,
    protocol: Protocol,
    noise: DeviceNoise,
    timing: TimingParams,
    cfg: PlannerConfig,
) -> Optional[LinkOutcome]:
    """Fidelity, success, cost and time of ``rounds`` recurrence rounds on a hop.

    Returns ``None`` when generation exceeds the attempt cap or a round has
    zero success probability.
    """
    p = gen_success_prob(link, timing)
    if not (0.0 < p <= 1.0) or 1.0 / p > timing.attempt_cap:
        return None
    period = attempt_period(link, timing)
    n = 2 ** rounds
    attempts = expected_max_attempts([(p, n)])
    if math.isinf(attempts):
        return None
    state = link.initial_state(cfg.state_model)
    t_round = round_time(cfg.round_counts, timing, link)
    if rounds:
        # raw pairs age while their siblings are still being generated
        state = decohere_state(state, max(0.0, (attempts - 1.0 / p) * period), link.t2_eff)
        lam_wait = 1.0 - decay_factor(t_round, link.t2_eff)
    else:
        lam_wait = 0.0
    res = multi_round(state, protocol, rounds, noise, cfg.round_counts, lam_wait)
    if not res.feasible:
        return None
    gen = attempts * period
    pur = rounds * t_round
    return LinkOutcome(
        f_out=res.fidelity,
        p_succ=res.p_succ,
        c_pairs=res.c_pairs,
        time=gen + pur,
        gen_time=gen,
        pur_time=pur,
        n_generators=n,
        p_gen=p,
        period=period,
    )


def _werner(f: float) -> float:
    return (4.0 * f - 1.0) / 3.0


def _log_w(f: float) -> float:
    w = _werner(f)
    return math.log(w) if w > 0 else -math.inf


def _link_covers(u: LinkOutcome, v: LinkOutcome, t2: float) -> bool:
    """True when option ``u`` makes ``v`` redundant for every completion."""
    if not (u.c_pairs <= v.c_pairs and u.time <= v.time):
        return False
    if not (u.c_pairs < v.c_pairs or u.time < v.time):
        return False
    if not (u.f_out >= v.f_out and u.p_succ >= v.p_succ):
        return False
    if not (u.n_generators <= v.n_generators and u.pur_time <= v.pur_time):
        return False
    # an earlier-finished pair waits longer; compare with the wait folded in
    inv = 0.0 if math.isinf(t2) else 1.0 / t2
    return _log_w(u.f_out) + u.time * inv >= _log_w(v.f_out) + v.time * inv


def link_design_space(
    link: LinkParams,
    cfg: PlannerConfig,
    noise: DeviceNoise | None = None,
    timing: TimingParams | None = None,
    policy_tag: Protocol | None = None,
    link_index: int = 0,
    t2: float | None = None,
) -> list[Option]:
    """Evaluated and Pareto-filtered (rounds, protocol) options for one hop."""
    noise = noise or DeviceNoise()
    timing = timing or TimingParams()
    t2 = link.t2_eff if t2 is None else t2
    bias = policy_tag or select_protocol_policy(
        link, noise, cfg.state_model, cfg.policy_delta, cfg.policy_p2_threshold
    )
    protocols = [bias] if cfg.protocol_mode == "policy" else [bias] + [
        p for p in Protocol if p is not bias
    ]
    f_floor = max(cfg.f_min_local, 0.25)
    raw: list[Option] = []
    for r in range(cfg.r_max + 1):
        for proto in protocols[:1] if r == 0 else protocols:
            out = evaluate_link(link, r, proto, noise, timing, cfg)
            if out is None or out.f_out < f_floor:
                continue
            if any(_same_outcome(out, o) for _, o in raw):
                continue
            raw.append((LinkChoice(link_index, r, proto), out))
    return [
        (ch, out)
        for ch, out in raw
        if not any(_link_covers(o, out, t2) for c2, o in raw if c2 != ch)
    ]


def _same_outcome(a: LinkOutcome, b: LinkOutcome) -> bool:
    return (a.f_out, a.p_succ, a.c_pairs, a.time, a.n_generators) == (
        b.f_out, b.p_succ, b.c_pairs, b.time, b.n_generators
    )


# ----------------------------------------------------------------- candidates

@dataclass
class Candidate:
    """A partial plan over the first ``hops`` links of a path."""

    f: float
    c: float
    t_gen: float
    t_swap: float
    p: float
    trace: tuple[LinkChoice, ...] = ()
    pur_max: float = 0.0
    slot: float = 0.0
    log_cdf: Optional[np.ndarray] = field(default=None, repr=False)
    d: Optional[float] = None
    outcomes: tuple[LinkOutcome, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.d is None:
            self.d = _log_w(self.f)

    @property
    def hops(self) -> int:
        return len(self.trace)

    @property
    def total_time(self) -> float:
        return self.t_gen + self.t_swap

    @classmethod
    def empty(cls) -> "Candidate":
        return cls(f=1.0, c=0.0, t_gen=0.0, t_swap=0.0, p=1.0)


def dominates(x: Candidate, y: Candidate) -> bool:
    """Strict Pareto dominance of ``x`` over ``y``.

    Coordinates: fidelity (compared after removing the wait still to come),
    success probability, pair cost, total time, purification schedule length
    and, when present, the generation-time distribution.
    """
    ge = (
        x.d >= y.d and x.p >= y.p and x.c <= y.c and x.total_time <= y.total_time
        and x.pur_max <= y.pur_max
    )
    if not ge:
        return False
    if x.log_cdf is not None and y.log_cdf is not None:
        if not np.all(x.log_cdf >= y.log_cdf):
            return False
    return (
        x.d > y.d or x.p > y.p or x.c < y.c or x.total_time < y.total_time
        or x.f > y.f or x.pur_max < y.pur_max
    )


# ------------------------------------------------------------- path context

class PathContext:
    """Per-path precomputation shared by every extension step."""

    def __init__(self, links: Sequence[LinkParams], timing: TimingParams,
                 noise: DeviceNoise, cfg: PlannerConfig):
        if not links:
            raise DomainError("path must contain at least one link")
        self.links = list(links)
        self.timing = timing
        self.noise = noise
        self.cfg = cfg
        self.t2 = min(link.t2_eff for link in links)
        self.inv_t2 = 0.0 if math.isinf(self.t2) else 1.0 / self.t2
        self.lam_swap = 1.0 - round_reliability(noise, cfg.swap_counts)
        self.swap_times = [swap_time(cfg.swap_counts, timing, link) for link in links]
        self.parallel = cfg.gen_agg is GenAgg.PARALLEL
        self.options: list[list[Option]] = [
            link_design_space(link, cfg, noise, timing, link_index=i, t2=self.t2)
            for i, link in enumerate(links)
        ]
        self.infeasible_reason: Optional[str] = None
        self.K = 0
        if any(not opts for opts in self.options):
            self.infeasible_reason = "a link has no admissible purification option"
        elif self.parallel:
            self._size_series()
        self._cdf_cache: dict[tuple[float, int], np.ndarray] = {}

    def _size_series(self) -> None:
        # sized from the config alone so every evaluation of a path shares one grid
        n_total = len(self.links) * 2 ** self.cfg.r_max
        p_min = min(gen_success_prob(link, self.timing) for link in self.links)
        if p_min <= 0.0:
            self.infeasible_reason = "a link never generates"
            return
        if p_min >= 1.0:
            self.K = 2
            return
        K = math.ceil(math.log(_TRUNC / n_total) / math.log1p(-p_min)) + 2
        if K > self.cfg.max_series_terms:
            self.infeasible_reason = "generation series exceeds max_series_terms"
            return
        self.K = max(K, 2)

    def log_cdf(self, p: float, n: int) -> np.ndarray:
        """log P(max of n geometric(p) attempt counts <= k) for k = 0..K-1."""
        key = (p, n)
        v = self._cdf_cache.get(key)
        if v is None:
            k = np.arange(self.K, dtype=float)
            with np.errstate(divide="ignore"):
                v = n * np.log1p(-np.power(1.0 - p, k))
            self._cdf_cache[key] = v
        return v

    def option_arrays(self, j: int) -> dict[str, np.ndarray]:
        opts = self.options[j]
        outs = [o for _, o in opts]
        arr = {
            "f": np.array([o.f_out for o in outs]),
            "p": np.array([o.p_succ for o in outs]),
            "c": np.array([o.c_pairs for o in outs]),
            "time": np.array([o.time for o in outs]),
            "pur": np.array([o.pur_time for o in outs]),
        }
        if self.parallel:
            arr["cdf"] = np.stack([self.log_cdf(o.p_gen, o.n_generators) for o in outs])
        return arr


def _expected_from_cdf(log_cdf: np.ndarray) -> np.ndarray:
    return np.sum(-np.expm1(log_cdf), axis=-1)


# ------------------------------------------------------------------ extension

@dataclass
class _Frontier:
    f: np.ndarray
    w: np.ndarray
    p: np.ndarray
    c: np.ndarray
    t_gen: np.ndarray
    pur: np.ndarray
    d: np.ndarray
    cdf: Optional[np.ndarray]
    t_swap: float
    slot: float
    hops: int
    parent: np.ndarray
    option: np.ndarray

    def __len__(self) -> int:
        return self.f.shape[0]

    def take(self, idx: np.ndarray) -> "_Frontier":
        return _Frontier(
            self.f[idx], self.w[idx], self.p[idx], self.c[idx], self.t_gen[idx],
            self.pur[idx], self.d[idx], None if self.cdf is None else self.cdf[idx],
            self.t_swap, self.slot, self.hops, self.parent[idx], self.option[idx],
        )


def _extend_arrays(fr: Optional[_Frontier], ctx: PathContext, j: int,
                   opt: dict[str, np.ndarray]) -> _Frontier:
    """All (frontier candidate, option) extensions for link ``j``."""
    link = ctx.links[j]
    period = attempt_period(link, ctx.timing)
    n_opt = opt["f"].shape[0]
    if fr is None:
        slot = period
        if ctx.parallel:
            cdf = opt["cdf"]
            t_gen = slot * _expected_from_cdf(cdf) + opt["pur"]
        else:
            cdf = None
            t_gen = opt["time"].copy()
        w = (4.0 * opt["f"] - 1.0) / 3.0
        f = opt["f"].copy()
        p = opt["p"].copy()
        c = opt["c"].copy()
        pur = opt["pur"].copy()
        t_swap = 0.0
        parent = np.zeros(n_opt, dtype=np.int64)
        option = np.arange(n_opt, dtype=np.int64)
        hops = 1
    else:
        m = len(fr)
        a = np.repeat(np.arange(m), n_opt)
        b = np.tile(np.arange(n_opt), m)
        slot = max(fr.slot, period)
        if ctx.parallel:
            cdf = fr.cdf[a] + opt["cdf"][b]
            pur = np.maximum(fr.pur[a], opt["pur"][b])
            t_gen = slot * _expected_from_cdf(cdf) + pur
            own_done = opt["time"][b]
        else:
            cdf = None
            pur = np.maximum(fr.pur[a], opt["pur"][b])
            t_gen = fr.t_gen[a] + opt["time"][b]
            own_done = t_gen
        # stored prefix pairs wait for the extra generation time, the new
        # pair waits from its own completion until the path is ready
        dwell = np.maximum(0.0, fr.hops * (t_gen - fr.t_gen[a]) + (t_gen - own_done))
        t_sw = ctx.swap_times[j]
        w_link = (4.0 * opt["f"][b] - 1.0) / 3.0
        w = fr.w[a] * w_link * (1.0 - ctx.lam_swap) * np.exp(-(dwell + t_sw) * ctx.inv_t2)
        f = np.clip((1.0 + 3.0 * w) / 4.0, 0.0, 1.0)
        p = fr.p[a] * opt["p"][b] * link.p_bsm
        c = fr.c[a] + opt["c"][b]
        t_swap = fr.t_swap + t_sw
        parent = a
        option = b
        hops = fr.hops + 1
    with np.errstate(divide="ignore"):
        d = np.log(np.maximum(w, 0.0))
    if ctx.parallel:
        d = d + hops * t_gen * ctx.inv_t2
    return _Frontier(f, w, p, c, t_gen, pur, d, cdf, t_swap, slot, hops, parent, option)


def _rank_order(fr: _Frontier, objective: Objective, target: float, hint: bool) -> np.ndarray:
    total = fr.t_gen + fr.t_swap
    feasible = fr.f >= target if hint else np.ones(len(fr), dtype=bool)
    infeas = (~feasible).astype(np.int8)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        rate = np.where(total > 0, fr.p / total, np.inf)
    if objective is Objective.GOODPUT:
        k1 = np.where(feasible, -rate, -fr.f)
        k2 = np.where(feasible, -fr.f, -rate)
        keys = (fr.c, total, k2, k1, infeas)
    elif objective is Objective.MIN_COST_THEN_TIME:
        k1 = np.where(feasible, fr.c, -fr.f)
        k2 = np.where(feasible, total, fr.c)
        keys = (-fr.f, k2, k1, infeas)
    else:
        k1 = np.where(feasible, total, -fr.f)
        k2 = np.where(feasible, fr.c, total)
        keys = (-fr.f, k2, k1, infeas)
    return np.lexsort(keys)


def _select(fr: _Frontier, width: float, objective: Objective, target: float,
            hint: bool) -> np.ndarray:
    """Indices of a mutually non-dominated subset, best first, at most ``width``."""
    order = _rank_order(fr, objective, target, hint)
    total = fr.t_gen + fr.t_swap
    # lower is better in every column
    scal = np.column_stack([-fr.d, -fr.p, fr.c, total, fr.pur])
    slack = np.column_stack([
        np.full(len(fr), _TOL),
        np.abs(fr.p) * _TOL,
        np.abs(fr.c) * _TOL,
        np.abs(total) * _TOL,
        np.abs(fr.pur) * _TOL,
    ])
    has_cdf = fr.cdf is not None
    cap = int(min(len(fr), width))
    # selected rows live in the first ``n`` slots of preallocated buffers
    sel_idx = np.empty(cap, dtype=np.int64)
    sel_scal = np.empty((cap, scal.shape[1]))
    sel_cdf = np.empty((cap, fr.cdf.shape[1])) if has_cdf else None
    upper = scal + slack
    n = 0
    for i in order:
        if n >= cap:
            break
        xs = scal[i]
        if n:
            cur = sel_scal[:n]
            cover = (cur <= upper[i]).all(axis=1)
            if has_cdf and cover.any():
                rows = np.flatnonzero(cover)
                cover[rows] = (sel_cdf[rows] >= fr.cdf[i] - _TOL).all(axis=1)
            if cover.any():
                continue
            # a later candidate may strictly beat an earlier pick; drop those
            beaten = (xs <= cur).all(axis=1)
            if beaten.any():
                beaten &= (xs < cur).any(axis=1)
                if has_cdf and beaten.any():
                    rows = np.flatnonzero(beaten)
                    beaten[rows] = (fr.cdf[i] >= sel_cdf[rows]).all(axis=1)
                if beaten.any():
                    keep = np.flatnonzero(~beaten)
                    m = keep.size
                    sel_idx[:m] = sel_idx[keep]
                    sel_scal[:m] = sel_scal[keep]
                    if has_cdf:
                        sel_cdf[:m] = sel_cdf[keep]
                    n = m
        sel_idx[n] = i
        sel_scal[n] = xs
        if has_cdf:
            sel_cdf[n] = fr.cdf[i]
        n += 1
    return sel_idx[:n].copy()


def _candidate_to_frontier(cands: Sequence[Candidate], slot: float = 0.0) -> _Frontier:
    n = len(cands)
    cdf = None
    if n and all(c.log_cdf is not None for c in cands):
        cdf = np.stack([c.log_cdf for c in cands])
    f = np.array([c.f for c in cands], dtype=float)
    return _Frontier(
        f=f,
        w=(4.0 * f - 1.0) / 3.0,
        p=np.array([c.p for c in cands], dtype=float),
        c=np.array([c.c for c in cands], dtype=float),
        t_gen=np.array([c.t_gen for c in cands], dtype=float),
        pur=np.array([c.pur_max for c in cands], dtype=float),
        d=np.array([c.d for c in cands], dtype=float),
        cdf=cdf,
        t_swap=0.0,
        slot=slot,
        hops=cands[0].hops if n else 0,
        parent=np.arange(n),
        option=np.zeros(n, dtype=np.int64),
    )


def prune(
    frontier: Sequence[Candidate],
    width: Optional[int] = None,
    objective: Objective = Objective.GOODPUT,
    target: float = 0.0,
) -> list[Candidate]:
    """Remove dominated candidates and keep at most ``width`` by objective rank.

    Time is compared on ``t_gen + t_swap`` so candidates built by hand may
    carry the whole time in either field.
    """
    if width is not None and width < 1:
        raise DomainError("width must be >= 1")
    if not frontier:
        return []
    fr = _candidate_to_frontier(frontier)
    fr.t_gen = np.array([c.total_time for c in frontier], dtype=float)
    idx = _select(fr, math.inf if width is None else width, Objective(objective), target, True)
    return [frontier[i] for i in idx]


def extend(prev: Candidate, option: Option, link: LinkParams, timing: TimingParams,
           cfg: PlannerConfig, ctx: PathContext) -> Candidate:
    """One-step extension of a partial plan by the option chosen for ``link``.

    ``ctx`` must be the context of the path that ``link`` belongs to; the link
    index recorded in the option selects the swap parameters.
    """
    choice, out = option
    j = choice.link_index
    if ctx.links[j] != link:
        raise DomainError("link does not match the context path at this index")
    opt = {
        "f": np.array([out.f_out]),
        "p": np.array([out.p_succ]),
        "c": np.array([out.c_pairs]),
        "time": np.array([out.time]),
        "pur": np.array([out.pur_time]),
    }
    if ctx.parallel:
        opt["cdf"] = ctx.log_cdf(out.p_gen, out.n_generators)[None, :]
    fr = None
    if prev.hops:
        fr = _Frontier(
            f=np.array([prev.f]), w=np.array([_werner(prev.f)]), p=np.array([prev.p]),
            c=np.array([prev.c]), t_gen=np.array([prev.t_gen]), pur=np.array([prev.pur_max]),
            d=np.array([prev.d]),
            cdf=None if prev.log_cdf is None else prev.log_cdf[None, :],
            t_swap=prev.t_swap, slot=prev.slot, hops=prev.hops,
            parent=np.zeros(1, dtype=np.int64), option=np.zeros(1, dtype=np.int64),
        )
    nxt = _extend_arrays(fr, ctx, j, opt)
    return Candidate(
        f=float(nxt.f[0]),
        c=float(nxt.c[0]),
        t_gen=float(nxt.t_gen[0]),
        t_swap=float(nxt.t_swap),
        p=float(nxt.p[0]),
        trace=prev.trace + (choice,),
        pur_max=float(nxt.pur[0]),
        slot=float(nxt.slot),
        log_cdf=None if nxt.cdf is None else nxt.cdf[0],
        d=float(nxt.d[0]),
        outcomes=prev.outcomes + (out,),
    )


# ----------------------------------------------------------------------- plans

@dataclass(frozen=True)
class Plan:
    per_link: tuple[LinkChoice, ...]
    end_to_end_rounds: int
    f_end: float
    p_succ_path: float
    makespan: float
    c_pairs_path: float
    feasible: bool
    goodput: float
    target_fidelity: float = 0.0
    t_gen: float = 0.0
    t_swap: float = 0.0
    per_link_outcomes: tuple[LinkOutcome, ...] = ()
    frontier: tuple["Plan", ...] = ()
    reason: str = ""

    @property
    def rounds(self) -> tuple[int, ...]:
        return tuple(ch.rounds for ch in self.per_link)

    @property
    def max_rounds(self) -> int:
        return max(self.rounds, default=0)


def _infeasible_plan(target: float, reason: str) -> Plan:
    return Plan((), 0, 0.0, 0.0, math.inf, math.inf, False, 0.0, target, reason=reason)


def finalize(cand: Candidate, ctx: PathContext, target: float, e2e_rounds: int = 0) -> Plan:
    """Close a full-path candidate into a plan, optionally with end-to-end rounds."""
    f = cand.f
    p = cand.p
    c = cand.c
    makespan = cand.total_time
    if e2e_rounds:
        cfg = ctx.cfg
        path_km = sum(link.length_km for link in ctx.links)
        t_round = round_time(cfg.round_counts, ctx.timing) + classical_rtt(path_km, ctx.timing)
        n = 2 ** e2e_rounds
        # end-to-end pairs arrive one cycle apart; charge the mean wait
        state = decohere_state(WernerPair(f), 0.5 * (n - 1) * makespan, ctx.t2)
        lam_wait = 1.0 - decay_factor(t_round, ctx.t2)
        res = multi_round(state, Protocol.BBPSSW, e2e_rounds, ctx.noise, cfg.round_counts, lam_wait)
        if not res.feasible:
            return _infeasible_plan(target, "end-to-end round failed")
        f = res.fidelity
        p = p * res.p_succ
        c = n * c / res.p_succ
        makespan = n * makespan + e2e_rounds * t_round
    feasible = f >= target
    goodput = p / makespan if feasible and makespan > 0 else (math.inf if feasible else 0.0)
    return Plan(
        per_link=cand.trace,
        end_to_end_rounds=e2e_rounds,
        f_end=f,
        p_succ_path=p,
        makespan=makespan,
        c_pairs_path=c,
        feasible=feasible,
        goodput=goodput,
        target_fidelity=target,
        t_gen=cand.t_gen,
        t_swap=cand.t_swap,
        per_link_outcomes=cand.outcomes,
    )


def _relaxed_rate(plan: Plan) -> float:
    return plan.p_succ_path / plan.makespan if plan.makespan > 0 else math.inf


def objective_key(plan: Plan, objective: Objective) -> tuple:
    """Sort key, smaller is better; feasible plans always precede infeasible ones."""
    if not plan.feasible:
        return (1, -plan.f_end, -_relaxed_rate(plan), plan.makespan, plan.c_pairs_path)
    if objective is Objective.GOODPUT:
        return (0, -plan.goodput, -plan.f_end, plan.makespan, plan.c_pairs_path)
    if objective is Objective.MIN_COST_THEN_TIME:
        return (0, plan.c_pairs_path, plan.makespan, -plan.f_end)
    return (0, plan.makespan, plan.c_pairs_path, -plan.f_end)


def _pareto_time_cost(plans: list[Plan]) -> list[Plan]:
    feas = sorted((p for p in plans if p.feasible), key=lambda p: (p.makespan, p.c_pairs_path))
    front: list[Plan] = []
    best_c = math.inf
    for p in feas:
        if p.c_pairs_path < best_c:
            front.append(p)
            best_c = p.c_pairs_path
    return front


def choose_plan(plans: list[Plan], objective: Objective) -> Plan:
    objective = Objective(objective)
    best = min(plans, key=lambda p: objective_key(p, objective))
    if objective is Objective.PARETO_SET and best.feasible:
        front = _pareto_time_cost(plans)
        return replace(front[0], frontier=tuple(front))
    return best


def _trace(history: list[tuple[np.ndarray, np.ndarray]], ctx: PathContext, idx: int):
    choices: list[LinkChoice] = []
    outs: list[LinkOutcome] = []
    for j in range(len(history) - 1, -1, -1):
        parent, option = history[j]
        ch, out = ctx.options[j][int(option[idx])]
        choices.append(ch)
        outs.append(out)
        idx = int(parent[idx])
    return tuple(reversed(choices)), tuple(reversed(outs))


def plan_path(
    links: Sequence[LinkParams],
    timing: TimingParams | None = None,
    noise: DeviceNoise | None = None,
    cfg: PlannerConfig | None = None,
    target_fidelity: float = 0.0,
    objective: Objective | None = None,
) -> Plan:
    """Plan per-hop purification for a routed path.

    Returns the best feasible plan for the objective, or the plan with the
    highest end-to-end fidelity (flagged infeasible, goodput 0) when the
    target cannot be met.
    """
    if not links:
        raise DomainError("path must contain at least one link")
    timing = timing or TimingParams()
    noise = noise or DeviceNoise()
    cfg = cfg or PlannerConfig()
    if objective is not None:
        cfg = replace(cfg, objective=Objective(objective))
    ctx = PathContext(links, timing, noise, cfg)
    if ctx.infeasible_reason:
        return _infeasible_plan(target_fidelity, ctx.infeasible_reason)

    hint = cfg.end_to_end_rounds_max == 0
    fr: Optional[_Frontier] = None
    history: list[tuple[np.ndarray, np.ndarray]] = []
    for j in range(len(ctx.links)):
        ext = _extend_arrays(fr, ctx, j, ctx.option_arrays(j))
        keep = _select(ext, cfg.width, cfg.objective, target_fidelity, hint)
        fr = ext.take(keep)
        history.append((fr.parent, fr.option))

    plans = []
    for i in range(len(fr)):
        trace, outs = _trace(history, ctx, i)
        cand = Candidate(
            f=float(fr.f[i]), c=float(fr.c[i]), t_gen=float(fr.t_gen[i]),
            t_swap=float(fr.t_swap), p=float(fr.p[i]), trace=trace,
            pur_max=float(fr.pur[i]), slot=fr.slot, d=float(fr.d[i]), outcomes=outs,
        )
        for r_e in range(cfg.end_to_end_rounds_max + 1):
            plans.append(finalize(cand, ctx, target_fidelity, r_e))
    return choose_plan(plans, cfg.objective)


def plan_fixed(
    links: Sequence[LinkParams],
    assignment: Sequence[tuple[int, Protocol]],
    timing: TimingParams | None = None,
    noise: DeviceNoise | None = None,
    cfg: PlannerConfig | None = None,
    target_fidelity: float = 0.0,
    e2e_rounds: int = 0,
) -> Plan:
    """Evaluate one fixed (rounds, protocol) assignment per hop, e.g. a static scheme."""
    timing = timing or TimingParams()
    noise = noise or DeviceNoise()
    cfg = cfg or PlannerConfig()
    if len(assignment) != len(links):
        raise DomainError("assignment length must match the path")
    r_top = max(r for r, _ in assignment)
    if r_top > cfg.r_max:
        cfg = replace(cfg, r_max=r_top)
    ctx = PathContext(links, timing, noise, cfg)
    if ctx.parallel and ctx.K == 0:
        return _infeasible_plan(target_fidelity, ctx.infeasible_reason or "no generation grid")
    cand = Candidate.empty()
    for j, (link, (r, proto)) in enumerate(zip(links, assignment)):
        out = evaluate_link(link, r, Protocol(proto), noise, timing, cfg)
        if out is None or out.f_out < 0.25:
            return _infeasible_plan(target_fidelity, f"link {j} infeasible at r={r}")
        cand = extend(cand, (LinkChoice(j, r, Protocol(proto)), out), link, timing, cfg, ctx)
    return finalize(cand, ctx, target_fidelity, e2e_rounds)


def static_plan(links, rounds: int, protocol: Protocol = Protocol.BBPSSW, **kw) -> Plan:
    return plan_fixed(links, [(rounds, protocol)] * len(links), **kw)


def enumerate_assignments(links: Sequence[LinkParams], r_max: int,
                          protocols: Sequence[Protocol] = tuple(Protocol)):
    per_link = [(0, protocols[0])] + [(r, p) for r in range(1, r_max + 1) for p in protocols]
    return product(per_link, repeat=len(links))
