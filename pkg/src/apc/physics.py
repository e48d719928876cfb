"""
Fidelity-level physics for bipartite recurrence purification.

States are either a scalar Werner pair or a Bell-diagonal vector ordered as
(Phi+, Psi+, Psi-, Phi-). Every map here is a pure function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

from .errors import DegenerateStateError, DomainError

_SUM_TOL = 1e-12


class Protocol(str, Enum):
    BBPSSW = "BBPSSW"
    DEJMPS = "DEJMPS"


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def _check_fidelity(F: float, name: str = "F") -> float:
    if not (0.0 <= F <= 1.0) or math.isnan(F):
        raise DomainError(f"{name}={F!r} outside [0, 1]")
    return float(F)


@dataclass(frozen=True)
class WernerPair:
    fidelity: float

    def __post_init__(self):
        _check_fidelity(self.fidelity)

    @property
    def werner_param(self) -> float:
        return (4.0 * self.fidelity - 1.0) / 3.0


@dataclass(frozen=True)
class BellDiagonal:
    """Bell-diagonal coefficients (a, b, c, d) for (Phi+, Psi+, Psi-, Phi-)."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        coeffs = (self.a, self.b, self.c, self.d)
        if any(x < 0 or math.isnan(x) for x in coeffs):
            raise DomainError(f"negative Bell-diagonal coefficient in {coeffs}")
        if abs(sum(coeffs) - 1.0) > _SUM_TOL:
            raise DomainError(f"Bell-diagonal coefficients sum to {sum(coeffs)!r}")

    @classmethod
    def werner(cls, F: float) -> "BellDiagonal":
        _check_fidelity(F)
        rest = (1.0 - F) / 3.0
        return cls(F, rest, rest, rest)

    @property
    def fidelity(self) -> float:
        return self.a

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def asymmetry(self) -> float:
        """Spread of the three error coefficients; zero for Werner states."""
        err = (self.b, self.c, self.d)
        return max(err) - min(err)


State = Union[WernerPair, BellDiagonal]


@dataclass(frozen=True)
class DeviceNoise:
    """Pauli-twirled error probabilities per 1q gate, 2q gate and readout."""

    p1: float = 0.0
    p2: float = 0.0
    p_meas: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2", "p_meas"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise DomainError(f"{name}={v!r} outside [0, 1]")

    @classmethod
    def correlated(cls, eps: float) -> "DeviceNoise":
        return cls(eps, eps, eps)


@dataclass(frozen=True)
class GateCounts:
    n_1q: int = 0
    n_2q: int = 1
    n_meas: int = 2

    def __post_init__(self):
        for name in ("n_1q", "n_2q", "n_meas"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise DomainError(f"{name}={v!r} must be a non-negative integer")


# One bilateral CNOT and two local readouts per kept pair.
ROUND_COUNTS = GateCounts(0, 1, 2)
SWAP_COUNTS = GateCounts(0, 1, 2)


@dataclass(frozen=True)
class RoundResult:
    state_out: State
    p_succ: float
    rounds_applied: int = 1


@dataclass(frozen=True)
class MultiRoundResult:
    state_out: State
    p_succ: float
    c_pairs: float
    rounds_applied: int
    feasible: bool = True

    @property
    def fidelity(self) -> float:
        return self.state_out.fidelity


def werner_from_fidelity(F: float) -> WernerPair:
    return WernerPair(_check_fidelity(F))


def fidelity_from_werner(w: float) -> float:
    if not (-1.0 / 3.0 - 1e-15 <= w <= 1.0 + 1e-15):
        raise DomainError(f"Werner parameter {w!r} outside [-1/3, 1]")
    return _clamp01((1.0 + 3.0 * w) / 4.0)


def bbpssw_success(F: float) -> float:
    G = 1.0 - F
    return F * F + (2.0 / 3.0) * F * G + (5.0 / 9.0) * G * G


def bbpssw_round(F: float | WernerPair) -> RoundResult:
    if isinstance(F, WernerPair):
        F = F.fidelity
    _check_fidelity(F)
    p = bbpssw_success(F)
    G = 1.0 - F
    F_new = (F * F + G * G / 9.0) / p
    return RoundResult(WernerPair(_clamp01(F_new)), p)


def dejmps_round(state: BellDiagonal) -> RoundResult:
    a, b, c, d = state.as_tuple()
    p = (a + d) ** 2 + (b + c) ** 2
    if p <= 0.0:
        raise DegenerateStateError(f"DEJMPS success probability is zero for {state}")
    out = BellDiagonal(
        (a * a + d * d) / p,
        (b * b + c * c) / p,
        2.0 * b * c / p,
        2.0 * a * d / p,
    )
    return RoundResult(out, p)


def pauli_to_depolarizing(p: float, n_qubits: int = 2) -> float:
    """Equivalent depolarizing strength 4^n p / (4^n - 1), clamped to [0, 1]."""
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"error probability {p!r} outside [0, 1]")
    if n_qubits < 1:
        raise DomainError("n_qubits must be >= 1")
    d2 = 4.0 ** n_qubits
    return _clamp01(d2 * p / (d2 - 1.0))


def measurement_depolarizing(p_meas: float) -> float:
    # readout bit flip folded into a two-qubit kick at leading order
    return pauli_to_depolarizing(p_meas / 2.0, 2)


def round_reliability(noise: DeviceNoise, counts: GateCounts = ROUND_COUNTS) -> float:
    r1 = 1.0 - pauli_to_depolarizing(noise.p1, 1)
    r2 = 1.0 - pauli_to_depolarizing(noise.p2, 2)
    rm = 1.0 - measurement_depolarizing(noise.p_meas)
    return _clamp01(r1 ** counts.n_1q * r2 ** counts.n_2q * rm ** counts.n_meas)


def compose_depolarizing(lam_a: float, lam_b: float) -> float:
    return _clamp01(1.0 - (1.0 - lam_a) * (1.0 - lam_b))


def apply_depolarizing(state: State, lam: float) -> State:
    if not (0.0 <= lam <= 1.0):
        raise DomainError(f"depolarizing strength {lam!r} outside [0, 1]")
    if lam == 0.0:
        return state
    keep = 1.0 - lam
    mix = lam / 4.0
    if isinstance(state, WernerPair):
        return WernerPair(_clamp01(keep * state.fidelity + mix))
    a, b, c, d = (keep * x + mix for x in state.as_tuple())
    return _normalized(a, b, c, d)


def _normalized(a: float, b: float, c: float, d: float) -> BellDiagonal:
    s = a + b + c + d
    return BellDiagonal(a / s, b / s, c / s, d / s)


def decay_factor(t: float, t2: float) -> float:
    """exp(-t/T2): the factor applied to the Werner parameter after waiting t."""
    if t2 <= 0 or math.isnan(t2):
        raise DomainError(f"T2_eff={t2!r} must be positive")
    if t < 0:
        raise DomainError(f"dwell time {t!r} must be non-negative")
    if math.isinf(t2):
        return 1.0
    return math.exp(-t / t2)


def decohere(F: float, dwell_time: float, t2_eff: float) -> float:
    """Relax the fidelity toward 1/4 with time constant ``t2_eff``."""
    _check_fidelity(F)
    return _clamp01(0.25 + (F - 0.25) * decay_factor(dwell_time, t2_eff))


def decohere_state(state: State, dwell_time: float, t2_eff: float) -> State:
    if isinstance(state, WernerPair):
        return WernerPair(decohere(state.fidelity, dwell_time, t2_eff))
    return apply_depolarizing(state, 1.0 - decay_factor(dwell_time, t2_eff))


def twirl(state: State) -> WernerPair:
    if isinstance(state, WernerPair):
        return state
    return WernerPair(_clamp01(state.a))


def ideal_round(state: State, protocol: Protocol) -> RoundResult:
    """One noiseless recurrence round with the protocol's natural tracking.

    BBPSSW twirls its input and always yields a Werner pair. DEJMPS keeps
    Bell-diagonal coefficients; on a Werner pair its update coincides with the
    BBPSSW closed form, which is used directly.
    """
    protocol = Protocol(protocol)
    if protocol is Protocol.BBPSSW or isinstance(state, WernerPair):
        return bbpssw_round(twirl(state))
    return dejmps_round(state)


def multi_round(
    state: State,
    protocol: Protocol,
    rounds: int,
    noise: DeviceNoise | None = None,
    counts: GateCounts = ROUND_COUNTS,
    lambda_wait: float = 0.0,
) -> MultiRoundResult:
    """Iterate ``rounds`` recurrence rounds with local and waiting noise.

    Each round applies the ideal map, then a single depolarizing kick built
    from the gate counts and ``lambda_wait``. A round with zero success
    probability yields an infeasible result rather than raising.
    """
    if rounds < 0:
        raise DomainError("rounds must be >= 0")
    noise = noise or DeviceNoise()
    lam_round = 1.0 - round_reliability(noise, counts)
    lam_tot = compose_depolarizing(lam_round, lambda_wait)
    p_total = 1.0
    for _ in range(rounds):
        try:
            res = ideal_round(state, protocol)
        except DegenerateStateError:
            return MultiRoundResult(state, 0.0, math.inf, rounds, feasible=False)
        if res.p_succ <= 0.0:
            return MultiRoundResult(state, 0.0, math.inf, rounds, feasible=False)
        state = apply_depolarizing(res.state_out, lam_tot)
        p_total *= res.p_succ
    return MultiRoundResult(state, p_total, 2.0 ** rounds / p_total, rounds)


def swap_compose(F_left: float, F_right: float) -> float:
    w1 = werner_from_fidelity(F_left).werner_param
    w2 = werner_from_fidelity(F_right).werner_param
    return fidelity_from_werner(w1 * w2)
