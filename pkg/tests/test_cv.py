import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from apc.cv import CvState, NlaParams, cv_fidelity_proxy, loss_discounted_proxy, nla_apply
from apc.errors import DomainError
from apc.timing import TimingParams


def golden_proxy(r, eta):
    lam = math.tanh(r)
    return eta * lam / (1 - (1 - eta) * lam)


def test_proxy_limits():
    assert cv_fidelity_proxy(CvState(0.0, 0.7)) == 0.0
    assert cv_fidelity_proxy(CvState(30.0, 1.0)) == pytest.approx(1.0, abs=1e-12)


def test_proxy_golden_value():
    value = cv_fidelity_proxy(CvState(1.2, 0.85))
    assert value == pytest.approx(golden_proxy(1.2, 0.85), abs=1e-15)
    assert value == pytest.approx(0.8098805, abs=5e-8)


def test_state_validation():
    with pytest.raises(DomainError):
        CvState(-0.1)
    with pytest.raises(DomainError):
        CvState(1.0, 0.0)
    with pytest.raises(DomainError):
        CvState(1.0, 1.0, lambda_tms=0.5)
    assert CvState.from_lambda(0.5).squeezing_r == pytest.approx(math.atanh(0.5))


def test_nla_examples():
    s = CvState(0.3, 0.9)
    zero = nla_apply(s, NlaParams(gain_g=1.5, stages_k=0, prefactor_a=0.3))
    assert zero.state == s and zero.p_succ == 0.3 and zero.c_cv == 0.0 and zero.t_cv == 0.0
    unit = nla_apply(s, NlaParams(gain_g=1.0, stages_k=3, prefactor_a=0.4))
    assert unit.lambda_out == pytest.approx(s.lambda_tms) and unit.p_succ == 0.4
    res = nla_apply(s, NlaParams(gain_g=1.5, stages_k=2, prefactor_a=1.0))
    assert res.p_succ == pytest.approx((1 / 2.25) ** 2, abs=1e-15)
    assert res.p_succ == pytest.approx(0.1975309, abs=5e-8)
    assert res.lambda_out == pytest.approx(2.25 * s.lambda_tms)


def test_nla_default_prefactor_and_clamp():
    p = NlaParams(gain_g=2.0, stages_k=3)
    assert p.prefactor == pytest.approx(1 / 27)
    res = nla_apply(CvState(1.2, 0.85), p)
    assert res.lambda_out == pytest.approx(1 - 1e-9)
    assert res.r_eff == pytest.approx(math.atanh(1 - 1e-9))
    assert res.p_succ == pytest.approx(1 / 27 / 64)


def test_nla_time():
    t = TimingParams()
    res = nla_apply(CvState(0.5), NlaParams(gain_g=1.2, stages_k=3, stage_time=2e-6, herald_km=10), t)
    assert res.t_cv == pytest.approx(3 * (2e-6 + 1e-4))
    assert res.c_cv == 3.0


@given(st.floats(1.0, 3.0), st.floats(0.01, 1.0), st.integers(1, 5), st.floats(0.01, 1.0))
def test_success_decreases_in_gain_and_stages(g, dg, K, A):
    p = nla_apply(CvState(0.3), NlaParams(g, K, A)).p_succ
    assert p <= A
    assert nla_apply(CvState(0.3), NlaParams(g + dg, K, A)).p_succ < p
    assert nla_apply(CvState(0.3), NlaParams(g + dg, K + 1, A)).p_succ < p


@given(st.floats(0.0, 3.0), st.floats(0.05, 1.0), st.floats(1.0, 3.0), st.integers(0, 4))
def test_nla_never_lowers_proxy(r, eta, g, K):
    s = CvState(r, eta)
    assert cv_fidelity_proxy(nla_apply(s, NlaParams(g, K)).state) >= cv_fidelity_proxy(s) - 1e-15


def test_proxy_strictly_monotone_on_grid():
    rs = [0.1 * i for i in range(1, 30)]
    etas = [0.05 * i for i in range(1, 21)]
    for eta in etas:
        vals = [cv_fidelity_proxy(CvState(r, eta)) for r in rs]
        assert all(b > a for a, b in zip(vals, vals[1:]))
    for r in rs:
        vals = [cv_fidelity_proxy(CvState(r, eta)) for eta in etas]
        assert all(b > a for a, b in zip(vals, vals[1:]))


def test_proxy_is_pluggable():
    assert cv_fidelity_proxy(CvState(1.0, 0.5), proxy=lambda lam, eta: lam * eta) == pytest.approx(
        math.tanh(1.0) * 0.5)
    assert loss_discounted_proxy(0.5, 1.0) == 0.5
