"""Latency model: fiber loss, attempt statistics, and per-operation times."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DomainError
from .physics import ROUND_COUNTS, SWAP_COUNTS, BellDiagonal, GateCounts, State, WernerPair

SERIES_TOL = 1e-12
SERIES_CAP = 1_000_000


@dataclass(frozen=True)
class TimingParams:
    t_1q: float = 1e-6
    t_cnot: float = 1e-6
    t_meas: float = 1e-6
    t_classical_per_round: float = 0.0
    speed_of_light_fiber: float = 2e8
    attenuation_db_per_km: float = 0.2
    attempt_period: Optional[float] = None
    p_det: float = 1.0
    attempt_cap: float = 1e6

    def __post_init__(self):
        for name in ("t_1q", "t_cnot", "t_meas", "t_classical_per_round"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0")
        if self.speed_of_light_fiber <= 0:
            raise DomainError("speed_of_light_fiber must be > 0")
        if self.attenuation_db_per_km < 0:
            raise DomainError("attenuation_db_per_km must be >= 0")
        if self.attempt_period is not None and self.attempt_period < 0:
            raise DomainError("attempt_period must be >= 0")
        if not (0.0 < self.p_det <= 1.0):
            raise DomainError("p_det must lie in (0, 1]")


@dataclass(frozen=True)
class LinkParams:
    """One fiber hop. ``bell`` optionally pins a non-Werner raw state."""

    length_km: float
    f0: float
    p_gen_override: Optional[float] = None
    p_bsm: float = 1.0
    t2_eff: float = math.inf
    bell: Optional[tuple[float, float, float, float]] = None

    @classmethod
    def with_bell(cls, length_km: float, bell: Sequence[float], **kw) -> "LinkParams":
        bell = tuple(float(x) for x in bell)
        return cls(length_km, bell[0], bell=bell, **kw)

    def initial_state(self, state_model: str = "werner") -> State:
        if self.bell is not None:
            bd = BellDiagonal(*self.bell)
            return bd if state_model == "bell_diagonal" else WernerPair(bd.a)
        if state_model == "bell_diagonal":
            return BellDiagonal.werner(self.f0)
        return WernerPair(self.f0)


def gen_success_prob(link: LinkParams, timing: TimingParams) -> float:
    if link.p_gen_override is not None:
        return float(link.p_gen_override)
    loss_db = timing.attenuation_db_per_km * link.length_km
    return timing.p_det * 10.0 ** (-loss_db / 10.0)


def classical_rtt(length_km: float, timing: TimingParams) -> float:
    return 2.0 * length_km * 1e3 / timing.speed_of_light_fiber


def attempt_period(link: LinkParams, timing: TimingParams) -> float:
    if timing.attempt_period is not None:
        return timing.attempt_period
    return classical_rtt(link.length_km, timing)


def _check_probs(probs: Iterable[float]) -> list[float]:
    out = [float(p) for p in probs]
    if not out:
        raise DomainError("at least one success probability is required")
    for p in out:
        if not (0.0 < p <= 1.0):
            raise DomainError(f"success probability {p!r} outside (0, 1]")
    return out


def expected_max_attempts(classes: Sequence[tuple[float, int]], tol: float = SERIES_TOL,
                          cap: int = SERIES_CAP) -> float:
    """E[max] over independent geometric attempt counts given as (p, multiplicity).

    Evaluates sum_{k>=1} [1 - prod_i (1 - (1-p_i)^(k-1))^n_i] block-wise and
    stops once a summand falls below ``tol``. Returns ``inf`` past ``cap``.
    """
    classes = [(p, n) for p, n in classes if n > 0]
    _check_probs(p for p, _ in classes)
    q = np.array([1.0 - p for p, _ in classes])
    n = np.array([float(m) for _, m in classes])
    total = 0.0
    start = 0
    block = 256
    while start < cap:
        k = np.arange(start, min(start + block, cap), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_cdf = np.log1p(-np.power.outer(q, k).T)
        # rows of log P(X_i <= k) weighted by multiplicity
        prod = np.exp(log_cdf @ n)
        terms = 1.0 - prod
        small = np.nonzero(terms < tol)[0]
        if small.size and k[small[0]] > 0:
            total += float(terms[: small[0] + 1].sum())
            # remaining tail decays geometrically at the slowest rate
            q_max = float(q.max())
            return total + float(terms[small[0]]) * q_max / (1.0 - q_max)
        total += float(terms.sum())
        start += block
        block = min(block * 2, 1 << 16)
    return math.inf


def expected_max_geometric(probs: Sequence[float], mode: str = "exact") -> float:
    """Expected maximum of independent geometric attempt counts.

    ``mode`` selects the evaluation: ``"exact"`` sums the tail series,
    ``"pmin"`` uses the shortcut 1/p_min and ``"identical"`` treats every link
    as having the worst success probability and uses inclusion-exclusion.
    """
    probs = _check_probs(probs)
    if mode == "exact":
        counts: dict[float, int] = {}
        for p in probs:
            counts[p] = counts.get(p, 0) + 1
        return expected_max_attempts(sorted(counts.items()))
    if mode == "pmin":
        return 1.0 / min(probs)
    if mode == "identical":
        return expected_max_identical(min(probs), len(probs))
    raise DomainError(f"unknown mode {mode!r}")


def expected_max_identical(p: float, h: int) -> float:
    """Inclusion-exclusion form for H i.i.d. geometric(p) counts."""
    _check_probs([p])
    if p == 1.0:
        return 1.0
    total = 0.0
    for j in range(1, h + 1):
        total += (-1) ** (j + 1) * math.comb(h, j) / (1.0 - (1.0 - p) ** j)
    return total


def round_time(counts: GateCounts, timing: TimingParams, link: LinkParams | None = None) -> float:
    """Gate time plus one classical round trip over the link."""
    gates = counts.n_1q * timing.t_1q + counts.n_2q * timing.t_cnot + counts.n_meas * timing.t_meas
    rtt = classical_rtt(link.length_km, timing) if link is not None else 0.0
    return gates + timing.t_classical_per_round + rtt


def swap_time(counts: GateCounts, timing: TimingParams, link: LinkParams) -> float:
    """Bell measurement plus a one-way outcome message across the new hop."""
    gates = counts.n_1q * timing.t_1q + counts.n_2q * timing.t_cnot + counts.n_meas * timing.t_meas
    return gates + timing.t_classical_per_round + 0.5 * classical_rtt(link.length_km, timing)


def gen_time(link: LinkParams, timing: TimingParams) -> float:
    """Expected heralded generation time; ``inf`` beyond the attempt cap."""
    p = gen_success_prob(link, timing)
    if p <= 0.0 or 1.0 / p > timing.attempt_cap:
        return math.inf
    return attempt_period(link, timing) / p


__all__ = [
    "TimingParams",
    "LinkParams",
    "gen_success_prob",
    "classical_rtt",
    "attempt_period",
    "expected_max_attempts",
    "expected_max_geometric",
    "expected_max_identical",
    "round_time",
    "swap_time",
    "gen_time",
    "ROUND_COUNTS",
    "SWAP_COUNTS",
]
