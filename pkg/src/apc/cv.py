"""
Effective continuous-variable model: a two-mode squeezed vacuum sent
through symmetric loss, optionally boosted by a K-stage noiseless linear
amplifier on the receiving side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

from .errors import DomainError
from .timing import TimingParams

LAMBDA_CEIL = 1.0 - 1e-9


@dataclass(frozen=True)
class CvState:
    squeezing_r: float
    transmissivity_eta: float = 1.0
    lambda_tms: Optional[float] = None

    def __post_init__(self):
        if self.squeezing_r < 0 or math.isnan(self.squeezing_r):
            raise DomainError("squeezing_r must be >= 0")
        if not (0.0 < self.transmissivity_eta <= 1.0):
            raise DomainError("transmissivity_eta must lie in (0, 1]")
        if self.lambda_tms is None:
            object.__setattr__(self, "lambda_tms", math.tanh(self.squeezing_r))
        elif abs(self.lambda_tms - math.tanh(self.squeezing_r)) > 1e-12:
            raise DomainError("lambda_tms must equal tanh(squeezing_r)")

    @classmethod
    def from_lambda(cls, lam: float, eta: float = 1.0) -> "CvState":
        if not (0.0 <= lam < 1.0):
            raise DomainError("lambda must lie in [0, 1)")
        return cls(math.atanh(lam), eta, lam)


@dataclass(frozen=True)
class NlaParams:
    gain_g: float = 1.0
    stages_k: int = 1
    prefactor_a: Optional[float] = None  # None: (1/(1+g))^K
    stage_time: float = 1e-6
    herald_km: float = 0.0

    def __post_init__(self):
        if self.gain_g < 1.0:
            raise DomainError("gain_g must be >= 1")
        if int(self.stages_k) != self.stages_k or self.stages_k < 0:
            raise DomainError("stages_k must be a non-negative integer")
        if self.prefactor_a is not None and not (0.0 < self.prefactor_a <= 1.0):
            raise DomainError("prefactor_a must lie in (0, 1]")
        if self.stage_time < 0 or self.herald_km < 0:
            raise DomainError("stage_time and herald_km must be >= 0")

    @property
    def prefactor(self) -> float:
        if self.prefactor_a is not None:
            return self.prefactor_a
        return (1.0 / (1.0 + self.gain_g)) ** self.stages_k


@dataclass(frozen=True)
class NlaResult:
    state: CvState
    p_succ: float
    c_cv: float
    t_cv: float
    lambda_out: float
    r_eff: float


def loss_discounted_proxy(lam: float, eta: float) -> float:
    """eta*lam / (1 - (1-eta)*lam): zero without squeezing, one when lossless at lam=1."""
    den = 1.0 - (1.0 - eta) * lam
    return 0.0 if den <= 0.0 else min(1.0, max(0.0, eta * lam / den))


def cv_fidelity_proxy(state: CvState,
                      proxy: Callable[[float, float], float] = loss_discounted_proxy) -> float:
    return proxy(state.lambda_tms, state.transmissivity_eta)


def nla_apply(state: CvState, params: NlaParams, timing: TimingParams | None = None) -> NlaResult:
    """Apply K ideal gain stages to the Schmidt parameter after channel loss."""
    timing = timing or TimingParams()
    K = params.stages_k
    g = params.gain_g
    lam = min(g ** K * state.lambda_tms, LAMBDA_CEIL) if K else state.lambda_tms
    out = state if K == 0 else replace(state, squeezing_r=math.atanh(lam), lambda_tms=lam)
    p = params.prefactor * (1.0 / (g * g)) ** K
    herald = 2.0 * params.herald_km * 1e3 / timing.speed_of_light_fiber
    t = K * (params.stage_time + herald)
    return NlaResult(out, p, float(K), t, lam, math.atanh(lam))
