import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ehfbl import bounds
from ehfbl.bounds import (
    TERM_LABELS,
    ChannelParams,
    achievable_log_M,
    awgn_capacity,
    awgn_dispersion,
    budget_penalties,
    eh_capacity,
    eh_dispersion,
    epsilon_n,
    first_feasible_n,
    info_density_moments,
    make_schedule,
    normal_approx_log_M,
    split_blocklength,
    theorem1_closed_form,
)
from ehfbl.ehmodel import HarvestModel
from ehfbl.exceptions import DomainError, NumericInconsistencyError, RegimeError
from ehfbl.numerics import std_normal_quantile

LOG2E = math.log2(math.e)
PARAM_SETS = [(1.0, 1.0), (0.25, 2.0), (3.0, 1.0), (10.0, 0.5), (0.01, 0.1)]


@pytest.fixture
def exp_moments(unit_params):
    return info_density_moments(unit_params, var_Y=1.0)


@pytest.mark.parametrize("P, s2, want", [(1.0, 1.0, 0.5), (3.0, 1.0, 1.0), (15.0, 1.0, 2.0), (6.0, 2.0, 1.0)])
def test_awgn_capacity(P, s2, want):
    assert awgn_capacity(P, s2) == want


def test_awgn_dispersion_values():
    assert awgn_dispersion(1.0, 1.0) == pytest.approx(3 / 8 * LOG2E ** 2, abs=1e-12)
    assert awgn_dispersion(1e9, 1.0) == pytest.approx(0.5 * LOG2E ** 2, rel=1e-8)
    assert awgn_dispersion(1e-12, 1.0) < 1e-11


@pytest.mark.parametrize("fn", [awgn_capacity, awgn_dispersion])
@pytest.mark.parametrize("P, s2", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
def test_awgn_domain(fn, P, s2):
    with pytest.raises(DomainError):
        fn(P, s2)


def test_normal_approx():
    assert normal_approx_log_M(1000, 0.5, 1.0, 1.0) == 500.0
    # n C_G + sqrt(n V_G) Phi^-1(0.025), evaluated at 40 digits with mpmath
    assert normal_approx_log_M(1000, 0.025, 1.0, 1.0) == pytest.approx(445.24317429122487661, abs=1e-9)
    assert normal_approx_log_M(1000, 0.01, 1.0, 1.0) < normal_approx_log_M(1000, 0.02, 1.0, 1.0)


def test_eh_capacity_examples():
    assert eh_capacity(ChannelParams(2.0, 2.0)) == 0.5
    assert eh_capacity(ChannelParams(1.0, 3.0)) == 1.0


def test_eh_capacity_equals_awgn():
    rng = np.random.default_rng(5)
    for s2, ey in rng.uniform(0.01, 50.0, size=(100, 2)):
        assert eh_capacity(ChannelParams(s2, ey)) == awgn_capacity(ey, s2)


def test_eh_dispersion():
    assert eh_dispersion(ChannelParams(1.0, 1.0)) == pytest.approx(0.5 * LOG2E ** 2, rel=1e-15)
    assert eh_dispersion(ChannelParams(1.0, 1e-12)) < 1e-11
    assert eh_dispersion(ChannelParams(1.0, 1e12)) == pytest.approx(LOG2E ** 2, rel=1e-10)


def test_channel_params_validation():
    with pytest.raises(DomainError):
        ChannelParams(0.0, 1.0)
    with pytest.raises(DomainError):
        ChannelParams(1.0, -2.0)


@pytest.mark.parametrize("s2, ey", PARAM_SETS)
def test_quadrature_moments_match_closed_forms(s2, ey):
    p = ChannelParams(s2, ey)
    m = info_density_moments(p, "quadrature", 64, var_Y=0.3)
    assert m.mean_bits == pytest.approx(eh_capacity(p), abs=1e-9)
    assert m.var_bits2 == pytest.approx(eh_dispersion(p), rel=1e-6)
    assert m.K == pytest.approx(m.abs3_bits3 / (2 * m.var_bits2 ** 1.5), rel=1e-12)
    assert m.varZ == pytest.approx(0.3 + 2 * ey ** 2)
    assert m.varZ >= 2 * ey ** 2


def test_abs3_matches_pinned_monte_carlo_oracle(unit_params):
    # 10^7 draws of G with E[Y] = sigma^2 = 1, numpy default_rng(12345):
    # mean |G - C|^3 = 2.70724, standard error 0.00496
    m = info_density_moments(unit_params)
    assert abs(m.abs3_bits3 - 2.7072435117428673) < 3 * 0.004964306270713291


def test_monte_carlo_moments_agree(unit_params):
    m = info_density_moments(unit_params, "monte_carlo", 200_000, var_Y=1.0, seed=11)
    q = info_density_moments(unit_params, var_Y=1.0)
    for name in ("mean_bits", "var_bits2", "abs3_bits3"):
        assert abs(getattr(m, name) - getattr(q, name)) <= 5 * m.std_errors[name]
    assert m.method == "monte_carlo"


def test_monte_carlo_inconsistency_is_raised(unit_params, monkeypatch):
    monkeypatch.setattr(bounds, "_ABS3_OVER_VAR32", 4.0)
    with pytest.raises(NumericInconsistencyError):
        info_density_moments(unit_params, "monte_carlo", 100_000)


def test_unknown_moment_method(unit_params):
    with pytest.raises(DomainError):
        info_density_moments(unit_params, "simpson")


def test_schedule_examples(unit_params):
    assert make_schedule(10_000, 1.0, unit_params).N_n == 922
    s = make_schedule(1024, 0.7, unit_params)
    assert s.eta_n == 10 / 1024
    assert 2.0 ** (-s.n * s.eta_n) == 1 / 1024
    p = ChannelParams(1.0, 2.5)
    for n in (2, 17, 1000, 123_457):
        for a in (0.3, 1.0, 2.0):
            s = make_schedule(n, a, p)
            assert s.E0n / s.N_n == pytest.approx(p.harvest_mean / 2)
            assert 0 < s.E0n < s.N_n * p.harvest_mean


@pytest.mark.parametrize("n", [0, 1])
def test_schedule_domain(unit_params, n):
    with pytest.raises(DomainError):
        make_schedule(n, 1.0, unit_params)


def test_split_blocklength_is_maximal():
    for n_hat in (20, 1000, 10 ** 4, 10 ** 6 + 3):
        for a in (0.5, 1.0):
            n = split_blocklength(n_hat, a)
            assert n + bounds.save_length(n, a) <= n_hat
            assert n + 1 + bounds.save_length(n + 1, a) > n_hat


def test_epsilon_n_zero_harvest_variance(unit_params):
    m = info_density_moments(unit_params, var_Y=0.0)
    s = make_schedule(4096, 1.0, unit_params)
    assert budget_penalties(s, m, 0.0, unit_params)["save"] == 0.0


def test_epsilon_n_pinned(unit_params, exp_moments):
    # exponential harvest, mean 1: N_n = 533, E0n = 266.5; four penalties summed at 40 digits
    s = make_schedule(4096, 1.0, unit_params)
    assert (s.N_n, s.E0n) == (533, 266.5)
    got = epsilon_n(4096, 0.1, s, exp_moments, 1.0, unit_params)
    assert got == pytest.approx(-0.10065940161188855167, rel=1e-12)


def test_epsilon_n_tends_to_eps(unit_params, exp_moments):
    prev = None
    for n in [10 ** k for k in range(3, 31, 3)]:
        s = make_schedule(n, 2.0, unit_params)
        pen = budget_penalties(s, exp_moments, 1.0, unit_params)
        if prev is not None:
            assert all(pen[k] < prev[k] for k in pen)
        prev = pen
    assert sum(prev.values()) < 1e-3


@pytest.mark.parametrize("kind", ["constant", "exponential", "uniform"])
def test_epsilon_n_below_eps_and_increasing(kind):
    p = ChannelParams(0.7, 1.3)
    hv = HarvestModel(kind, 1.3)
    m = info_density_moments(p, var_Y=hv.var)
    for a in (0.5, 1.0, 1.5):
        for eps in (0.05, 0.3, 0.8):
            vals = []
            for n in [64 * 2 ** k for k in range(15)]:
                e = epsilon_n(n, eps, make_schedule(n, a, p), m, hv.var, p)
                assert e < eps
                vals.append(e)
            assert np.all(np.diff(vals) > 0)


def test_achievable_pinned(unit_params, exp_moments):
    s = make_schedule(4096, 1.0, unit_params)
    rep = achievable_log_M(4096, 0.5, s, exp_moments, 1.0, unit_params)
    assert rep.feasible
    # n C + sqrt(n V) Phi^-1(eps_n) - log2 n - 1 at 40 digits
    assert rep.log_M_bits == pytest.approx(2000.6385718600706117, abs=1e-8)
    infeasible = achievable_log_M(4096, 0.1, s, exp_moments, 1.0, unit_params)
    assert not infeasible.feasible and infeasible.log_M_bits is None
    assert infeasible.epsilon_n < 0


def test_achievable_dispersion_vanishes_at_half(unit_params, exp_moments):
    n = 10 ** 6
    s = make_schedule(n, 1.0, unit_params)
    eps = 0.5 + sum(budget_penalties(s, exp_moments, 1.0, unit_params).values())
    rep = achievable_log_M(n, eps, s, exp_moments, 1.0, unit_params)
    assert rep.epsilon_n == pytest.approx(0.5, abs=1e-15)
    assert abs(rep.terms["dispersion_term"]) < 1e-9 * n


def test_achievable_below_capacity_and_monotone(unit_params, exp_moments):
    for n in (10 ** 5, 10 ** 6, 10 ** 7):
        s = make_schedule(n, 1.0, unit_params)
        prev = -math.inf
        for eps in np.linspace(0.02, 0.98, 49):
            rep = achievable_log_M(n, eps, s, exp_moments, 1.0, unit_params)
            if not rep.feasible:
                continue
            assert rep.log_M_bits >= prev
            prev = rep.log_M_bits
            if eps <= 0.5:
                assert rep.log_M_bits < n * exp_moments.mean_bits
            assert set(rep.terms) == set(TERM_LABELS)
            assert math.fsum(rep.terms.values()) == pytest.approx(rep.log_M_bits, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 20.0), st.floats(0.05, 20.0), st.floats(0.01, 0.99),
       st.floats(0.3, 2.0), st.integers(1000, 10 ** 9), st.sampled_from(["constant", "exponential", "uniform"]))
def test_normal_approx_dominates_eh_bound(s2, ey, eps, a, n, kind):
    p = ChannelParams(s2, ey)
    hv = HarvestModel(kind, ey)
    m = info_density_moments(p, var_Y=hv.var, order_or_trials=16)
    s = make_schedule(n, a, p)
    rep = achievable_log_M(n, eps, s, m, hv.var, p)
    if rep.feasible:
        assert normal_approx_log_M(s.n_hat, eps, ey, s2) >= rep.log_M_bits
        assert math.fsum(rep.terms.values()) == pytest.approx(rep.log_M_bits, abs=1e-9)


def test_closed_form_at_half(unit_params, exp_moments):
    n_hat = 10 ** 6
    rep = theorem1_closed_form(n_hat, 0.5, 1.0, exp_moments, 1.0, unit_params)
    assert rep.terms["dispersion_term"] == 0.0
    C = exp_moments.mean_bits
    C_hat = rep.variants["C_hat"]
    want = (n_hat * C - math.sqrt(n_hat) * math.log(n_hat) * C
            - math.sqrt(n_hat) * C_hat / math.log(n_hat / 2) ** 2 - math.log2(n_hat))
    assert rep.log_M_bits == pytest.approx(want, rel=1e-13)


def test_closed_form_constants(unit_params, exp_moments):
    rep = theorem1_closed_form(10 ** 6, 0.1, 1.0, exp_moments, 1.0, unit_params)
    n0 = rep.variants["n0"]
    en0 = epsilon_n(n0, 0.1, make_schedule(n0, 1.0, unit_params), exp_moments, 1.0, unit_params)
    fprime = lambda p: 1.0 / (math.exp(-std_normal_quantile(p) ** 2 / 2) / math.sqrt(2 * math.pi))
    assert rep.variants["f_hat"] == pytest.approx(max(fprime(en0), fprime(0.1)), rel=1e-12)
    V = exp_moments.var_bits2
    assert rep.variants["C_hat"] == pytest.approx(4 * math.sqrt(V) * 3.0 * rep.variants["f_hat"], rel=1e-12)
    assert math.fsum(rep.terms.values()) == pytest.approx(rep.log_M_bits, abs=1e-9)
    # eps < 1/2 uses sqrt(n_hat V); the single-coefficient variant is larger
    assert rep.variants["half_disp_log_M_bits"] > rep.log_M_bits


def test_closed_form_upper_half_uses_half_dispersion(unit_params, exp_moments):
    rep = theorem1_closed_form(10 ** 6, 0.8, 1.0, exp_moments, 1.0, unit_params)
    assert rep.terms["dispersion_term"] == rep.variants["dispersion_half"]
    assert rep.variants["half_disp_log_M_bits"] == pytest.approx(rep.log_M_bits, abs=1e-9)


def test_closed_form_regime_guard(unit_params, exp_moments):
    with pytest.raises(RegimeError):
        theorem1_closed_form(1000, 0.5, 2.0, exp_moments, 1.0, unit_params, n0=10 ** 6)


def test_first_feasible_n(unit_params, exp_moments):
    n0 = first_feasible_n(0.1, 1.0, exp_moments, 1.0, unit_params)
    ok = lambda n: epsilon_n(n, 0.1, make_schedule(n, 1.0, unit_params), exp_moments, 1.0, unit_params) > 0
    assert ok(n0) and not ok(n0 - 1)


@pytest.mark.parametrize("kind", ["constant", "exponential", "uniform"])
def test_closed_form_below_exact_pipeline_on_grid(kind):
    p = ChannelParams(1.0, 1.0)
    hv = HarvestModel(kind, 1.0)
    m = info_density_moments(p, var_Y=hv.var)
    checked = 0
    for a in (0.5, 1.0, 1.5, 2.0):
        for eps in (0.01, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99):
            for n in (10 ** 4, 10 ** 5, 10 ** 6, 10 ** 7, 10 ** 8):
                s = make_schedule(n, a, p)
                exact = achievable_log_M(n, eps, s, m, hv.var, p)
                if not exact.feasible:
                    continue
                try:
                    closed = theorem1_closed_form(s.n_hat, eps, a, m, hv.var, p)
                except RegimeError:
                    continue
                assert closed.variants["n"] == n
                assert closed.log_M_bits <= exact.log_M_bits
                checked += 1
    assert checked > 80
