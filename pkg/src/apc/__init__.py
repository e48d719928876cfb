"""Adaptive purification planning for quantum repeater paths."""

from .controller import (
    APCController,
    Bipartite,
    Cv,
    GhzStar,
    PlanRequest,
    PlanResponse,
    plan,
    request_from_dict,
)
from .cv import CvState, NlaParams, cv_fidelity_proxy, nla_apply
from .errors import DegenerateStateError, DomainError, Issue, ValidationError
from .ghz import GhzPassParams, GhzState, ghz_from_arms, ghz_multi_pass, ghz_pass
from .physics import (
    BellDiagonal,
    DeviceNoise,
    GateCounts,
    Protocol,
    WernerPair,
    apply_depolarizing,
    bbpssw_round,
    compose_depolarizing,
    decohere,
    dejmps_round,
    multi_round,
    pauli_to_depolarizing,
    round_reliability,
    swap_compose,
    werner_from_fidelity,
)
from .planner import (
    Candidate,
    GenAgg,
    LinkChoice,
    LinkOutcome,
    Objective,
    Plan,
    PlannerConfig,
    extend,
    link_design_space,
    plan_path,
    prune,
    select_protocol_policy,
)
from .timing import (
    LinkParams,
    TimingParams,
    expected_max_geometric,
    gen_success_prob,
    gen_time,
    round_time,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
