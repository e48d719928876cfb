import math

import numpy as np
import pytest
from hypothesis import settings

from apc.physics import BellDiagonal, DeviceNoise, Protocol
from apc.planner import (
    Candidate,
    LinkChoice,
    PathContext,
    PlannerConfig,
    evaluate_link,
    extend,
    finalize,
)
from apc.timing import LinkParams, TimingParams

settings.register_profile("repo", derandomize=True, deadline=None, max_examples=60)
settings.load_profile("repo")


def brute_force_best(links, timing, noise, cfg, target):
    """Best goodput over every per-hop (rounds, protocol) assignment.

    Walks the assignment tree depth first, reusing each prefix, and never
    prunes: every leaf is finalized and scored.
    """
    ctx = PathContext(links, timing, noise, cfg)
    per_link = []
    for j, link in enumerate(links):
        opts = []
        for r in range(cfg.r_max + 1):
            for proto in ([Protocol.BBPSSW] if r == 0 else list(Protocol)):
                out = evaluate_link(link, r, proto, noise, timing, cfg)
                if out is not None:
                    opts.append((LinkChoice(j, r, proto), out))
        per_link.append(opts)

    best = [0.0, None]

    def walk(prefix, j):
        if j == len(links):
            plan = finalize(prefix, ctx, target)
            if plan.feasible and plan.goodput > best[0]:
                best[0], best[1] = plan.goodput, plan
            return
        for opt in per_link[j]:
            walk(extend(prefix, opt, links[j], timing, cfg, ctx), j + 1)

    walk(Candidate.empty(), 0)
    return best[0], best[1]


def random_instance(rng: np.random.Generator, max_links=3):
    """A small random path with mixed Werner and Bell-diagonal links."""
    n = int(rng.integers(1, max_links + 1))
    links = []
    for _ in range(n):
        kw = dict(
            p_bsm=float(rng.choice([1.0, 0.8, 0.5])),
            t2_eff=float(rng.choice([math.inf, 0.01, 0.1, 1.0])),
        )
        length = float(rng.uniform(1, 30))
        if rng.random() < 0.3:
            a = rng.uniform(0.7, 0.95)
            split = rng.dirichlet([1, 1, 1]) * (1 - a)
            links.append(LinkParams.with_bell(length, (a, *split), **kw))
        else:
            links.append(LinkParams(length, float(rng.uniform(0.7, 0.97)), **kw))
    timing = TimingParams(p_det=float(rng.choice([1.0, 0.5, 0.1])))
    noise = DeviceNoise.correlated(float(rng.choice([0.0, 1e-3, 1e-2])))
    state_model = str(rng.choice(["werner", "bell_diagonal"]))
    target = float(rng.uniform(0.6, 0.95))
    return links, timing, noise, state_model, target


@pytest.fixture
def werner_link():
    return LinkParams(15.0, 0.85, p_gen_override=1.0)


@pytest.fixture
def asym_bell():
    return BellDiagonal(0.7, 0.2, 0.05, 0.05)


__all__ = ["brute_force_best", "random_instance", "PlannerConfig"]
