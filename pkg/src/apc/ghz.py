"""Isotropic GHZ acceptance model for star-shaped multipartite distribution."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DomainError
from .timing import TimingParams, classical_rtt


@dataclass(frozen=True)
class GhzState:
    n_parties: int
    fidelity: float

    def __post_init__(self):
        if int(self.n_parties) != self.n_parties or self.n_parties < 2:
            raise DomainError("a GHZ state needs at least 2 parties")
        if not (0.0 <= self.fidelity <= 1.0):
            raise DomainError(f"GHZ fidelity {self.fidelity!r} outside [0, 1]")


@dataclass(frozen=True)
class GhzPassParams:
    f_anc: float = 1.0
    p_meas_ghz: float = 0.0
    passes: int = 1

    def __post_init__(self):
        for name in ("f_anc", "p_meas_ghz"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise DomainError(f"{name}={v!r} outside [0, 1]")
        if int(self.passes) != self.passes or self.passes < 0:
            raise DomainError("passes must be a non-negative integer")

    @property
    def epsilon(self) -> float:
        return min(1.0, max(0.0, (1.0 - self.f_anc) + self.p_meas_ghz))


@dataclass(frozen=True)
class GhzPassResult:
    state: GhzState
    p_succ: float
    ancilla_cost: int
    check_count: int
    feasible: bool = True


@dataclass(frozen=True)
class GhzMultiResult:
    state: GhzState
    p_succ: float
    ancillas: int
    time: float
    passes_applied: int
    feasible: bool = True


def ghz_from_arms(arm_fidelities: Sequence[float], n_parties: int | None = None) -> GhzState:
    """Fuse purified bipartite arms into an isotropic GHZ estimate.

    Werner parameters of the arms multiply; the product sets the weight of
    the target component. ``n_parties`` defaults to one party per arm (pass
    ``len(arms) + 1`` to count the hub as a party).
    """
    arms = [float(f) for f in arm_fidelities]
    if len(arms) < 2:
        raise DomainError("GHZ fusion needs at least two arms")
    for f in arms:
        if not (0.0 <= f <= 1.0):
            raise DomainError(f"arm fidelity {f!r} outside [0, 1]")
    n = len(arms) if n_parties is None else int(n_parties)
    w = math.prod((4.0 * f - 1.0) / 3.0 for f in arms)
    dim = 2.0 ** n
    return GhzState(n, min(1.0, max(0.0, (1.0 + (dim - 1.0) * w) / dim)))


def ghz_pass(state: GhzState, params: GhzPassParams) -> GhzPassResult:
    """One stabilizer pass of m = N parity checks with aggregated error eps."""
    m = state.n_parties
    eps = params.epsilon
    keep_good = (1.0 - eps) ** m
    keep_bad = (1.0 - keep_good) / (2.0 ** m - 1.0)
    F = state.fidelity
    p = F * keep_good + (1.0 - F) * keep_bad
    if p <= 0.0 or keep_good <= 0.0:
        return GhzPassResult(state, 0.0, m, m, feasible=False)
    f_out = min(1.0, F * keep_good / p)
    return GhzPassResult(GhzState(m, f_out), p, m, m)


def check_time(timing: TimingParams, farthest_km: float = 0.0) -> float:
    """Duration of one parity check, including the outcome round trip."""
    return timing.t_cnot + timing.t_meas + classical_rtt(farthest_km, timing)


def ghz_multi_pass(
    state: GhzState,
    params: GhzPassParams,
    timing: TimingParams | None = None,
    farthest_km: float = 0.0,
) -> GhzMultiResult:
    """Iterate passes; stops with an infeasible result when a pass cannot succeed."""
    timing = timing or TimingParams()
    p_total = 1.0
    ancillas = 0
    per_pass = state.n_parties * check_time(timing, farthest_km)
    for i in range(params.passes):
        res = ghz_pass(state, params)
        ancillas += res.ancilla_cost
        if not res.feasible:
            return GhzMultiResult(state, 0.0, ancillas, (i + 1) * per_pass, i + 1, feasible=False)
        state = res.state
        p_total *= res.p_succ
    return GhzMultiResult(state, p_total, ancillas, params.passes * per_pass, params.passes)
