import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sint

from mlincentive.errors import DomainError, InconsistentTargetError
from mlincentive.flux import (
    CommissionPolicy,
    IncentiveProfile,
    PriceSchedule,
    TransactionCosts,
    apply_K,
    apply_K_commission,
    apply_transaction_costs,
    collector_share,
    invert_K,
    invert_K_commission,
    positivity_check,
    zero_sum_residual,
)
from mlincentive.io import read_grid_function, write_grid_function
from mlincentive.numerics import GridFunction

from conftest import random_c1_prices

N = 4097


def si_oracle(x):
    return np.array([float(mpmath.si(t)) for t in np.atleast_1d(x)])


def test_constant_price_gives_log_profile():
    prof = apply_K(PriceSchedule.constant(1.0, N))
    s = prof.v_i.s
    assert prof.singular
    assert np.max(np.abs(prof.v_r.values[1:] + np.log(s[1:]))) < 1e-12
    assert np.max(np.abs(prof.v_i.values[1:] + np.log(s[1:]) + 1.0)) < 1e-12
    # the first node reports the first interior value
    assert prof.v_i.values[0] == prof.v_i.values[1]


def test_sine_price_matches_sine_integral_oracle():
    prof = apply_K(PriceSchedule.from_callable(lambda s: np.sin(np.pi * s), N))
    s = prof.v_i.s[::32]
    ref = float(mpmath.si(math.pi)) - si_oracle(np.pi * s) - np.sin(np.pi * s)
    assert not prof.singular
    assert np.max(np.abs(prof.v_i.values[::32] - ref)) < 1e-9


def test_zero_price_and_vr_vanishes_at_saturation():
    prof = apply_K(PriceSchedule.constant(0.0, 65))
    assert np.all(prof.v_i.values == 0.0) and np.all(prof.v_r.values == 0.0)
    prof = apply_K(PriceSchedule.from_callable(lambda s: 1 + s, 65))
    assert prof.v_r.values[-1] == 0.0
    assert np.allclose(prof.v_i.values[1:], prof.v_r.values[1:] - (1 + prof.v_i.s[1:]))


def test_price_must_be_finite_and_bounded():
    with pytest.raises(DomainError):
        PriceSchedule(GridFunction(np.array([1.0, np.inf, 1.0])))
    with pytest.raises(DomainError):
        PriceSchedule(GridFunction(np.ones(9), singular=True))


def test_invert_cosine_gives_sinc_minus_cos():
    price = invert_K(IncentiveProfile.from_callable(lambda s: np.cos(np.pi * s), N))
    s = price.pi.s
    assert np.max(np.abs(price.values - (np.sinc(s) - np.cos(np.pi * s)))) < 1e-8


def test_invert_zero_and_si_target():
    assert np.all(invert_K(IncentiveProfile(GridFunction.constant(0.0, 33))).values == 0.0)
    s = np.linspace(0, 1, N)
    v = float(mpmath.si(math.pi)) - si_oracle(np.pi * s) - np.sin(np.pi * s)
    price = invert_K(IncentiveProfile(GridFunction(v)))
    assert np.max(np.abs(price.values - np.sin(np.pi * s))) < 1e-8


def test_invert_rejects_zero_sum_violation_with_residual():
    with pytest.raises(InconsistentTargetError) as exc:
        invert_K(IncentiveProfile(GridFunction.constant(0.1, 65)))
    assert exc.value.residual == pytest.approx(0.1, abs=1e-12)
    assert "residual=1.000e-01" in str(exc.value)


def test_invert_singular_target():
    target = IncentiveProfile.from_callable(lambda s: -np.log(s) - 1.0, N, singular=True)
    price = invert_K(target)
    assert np.max(np.abs(price.values - 1.0)) < 1e-8


def test_round_trip_c1_family(c1_prices):
    for f in c1_prices:
        pi = PriceSchedule.from_callable(f, N)
        back = invert_K(apply_K(pi))
        assert np.max(np.abs(back.values - pi.values)) < 1e-6


@pytest.mark.parametrize("g", [0.5, 0.7, 1.0])
def test_commission_round_trip(g, c1_prices):
    gamma = CommissionPolicy.constant(g, N)
    for f in c1_prices[:8]:
        pi = PriceSchedule.from_callable(f, N)
        back = invert_K_commission(apply_K_commission(pi, gamma), gamma)
        assert np.max(np.abs(back.values - pi.values)) < 1e-6


def test_commission_round_trip_variable_gamma(c1_prices):
    gamma = CommissionPolicy.from_callable(lambda s: 0.6 + 0.3 * np.sin(3 * s), N)
    for f in c1_prices[:5]:
        pi = PriceSchedule.from_callable(f, N)
        back = invert_K_commission(apply_K_commission(pi, gamma), gamma)
        assert np.max(np.abs(back.values - pi.values)) < 1e-6


def test_commission_limits():
    pi = PriceSchedule.from_callable(lambda s: np.sin(np.pi * s), N)
    full = apply_K_commission(pi, CommissionPolicy.constant(1.0, N))
    assert np.array_equal(full.v_i.values, apply_K(pi).v_i.values)
    none = apply_K_commission(pi, CommissionPolicy.constant(0.0, N))
    assert np.max(np.abs(none.v_i.values + pi.values)) < 1e-15


def test_commission_half_scales_revenue():
    pi = PriceSchedule.from_callable(lambda s: np.sin(np.pi * s), N)
    prof = apply_K_commission(pi, CommissionPolicy.constant(0.5, N))
    s = prof.v_i.s[::64]
    ref = 0.5 * (float(mpmath.si(math.pi)) - si_oracle(np.pi * s)) - np.sin(np.pi * s)
    assert np.max(np.abs(prof.v_i.values[::64] - ref)) < 1e-9


def test_commission_inverse_reduces_to_plain_inverse():
    v = IncentiveProfile.from_callable(lambda s: np.cos(np.pi * s), N)
    a = invert_K(v).values
    b = invert_K_commission(v, CommissionPolicy.constant(1.0, N)).values
    assert np.max(np.abs(a - b)) < 1e-12
    zero = invert_K_commission(IncentiveProfile(GridFunction.constant(0.0, 65)), CommissionPolicy.constant(0.3, 65))
    assert np.all(zero.values == 0.0)


def test_commission_inverse_errors():
    v = IncentiveProfile.from_callable(lambda s: np.cos(np.pi * s), 257)
    with pytest.raises(DomainError):
        invert_K_commission(v, CommissionPolicy.from_callable(lambda s: s, 257))
    # a constant target has no price under gamma = 0.5: v(1) + pi(1) != 0
    with pytest.raises(InconsistentTargetError):
        invert_K_commission(IncentiveProfile(GridFunction.constant(0.3, 257)), CommissionPolicy.constant(0.5, 257))


def test_commission_policy_range():
    with pytest.raises(DomainError):
        CommissionPolicy.constant(1.2, 9)
    with pytest.raises(DomainError):
        CommissionPolicy.constant(-0.1, 9)


def test_collector_share_examples():
    pi = PriceSchedule.from_callable(lambda s: np.sin(np.pi * s), N)
    assert collector_share(pi, CommissionPolicy.constant(1.0, N)) == 0.0
    assert collector_share(pi, CommissionPolicy.constant(0.5, N)) == pytest.approx(1 / np.pi, abs=1e-10)
    one = PriceSchedule.constant(1.0, N)
    assert collector_share(one, CommissionPolicy.from_callable(lambda s: s, N)) == pytest.approx(0.5, abs=1e-14)


def test_zero_sum_examples():
    assert zero_sum_residual(IncentiveProfile.from_callable(lambda s: np.cos(np.pi * s), N)) == pytest.approx(0, abs=1e-10)
    assert abs(zero_sum_residual(apply_K(PriceSchedule.constant(1.0, N)))) < 1e-4
    pi = PriceSchedule.from_callable(lambda s: np.sin(np.pi * s), N)
    gamma = CommissionPolicy.constant(0.5, N)
    assert zero_sum_residual(apply_K_commission(pi, gamma)) == pytest.approx(-1 / np.pi, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_zero_sum_property(seed):
    f = random_c1_prices(1, seed)[0]
    assert abs(zero_sum_residual(apply_K(PriceSchedule.from_callable(f, 2049)))) < 1e-4
    g = random_c1_prices(1, seed, zero_at_origin=True)[0]
    assert abs(zero_sum_residual(apply_K(PriceSchedule.from_callable(g, 2049)))) < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.floats(min_value=0.05, max_value=1.0))
def test_commission_balance_property(seed, g):
    f = random_c1_prices(1, seed)[0]
    pi = PriceSchedule.from_callable(f, 2049)
    gamma = CommissionPolicy.constant(g, 2049)
    total = zero_sum_residual(apply_K_commission(pi, gamma)) + collector_share(pi, gamma)
    assert abs(total) < 1e-6


def test_transaction_costs():
    prof = apply_K(PriceSchedule.constant(1.0, N))
    same = apply_transaction_costs(prof, TransactionCosts())
    assert np.array_equal(same.v_i.values, prof.v_i.values)
    c = 0.3
    got = apply_transaction_costs(prof, TransactionCosts(seller_cost=c, buyer_cost=0.2))
    s = prof.v_i.s
    ref = -np.log(s[1:]) - 1.0 + c * np.log(s[1:]) - 0.2
    assert np.max(np.abs(got.v_i.values[1:] - ref)) < 1e-12
    flat = apply_transaction_costs(prof, TransactionCosts(seller_cost=1.0))
    assert not flat.singular
    assert np.max(np.abs(flat.v_i.values + 1.0)) < 1e-12
    with pytest.raises(DomainError):
        TransactionCosts(buyer_cost=-1.0)


def test_positivity_examples():
    ok, where = positivity_check(IncentiveProfile.from_callable(lambda s: np.cos(np.pi * s), N))
    assert ok and where is None
    ok, where = positivity_check(IncentiveProfile.from_callable(lambda s: s - 0.5, N))
    assert not ok and where == pytest.approx(1 / (N - 1))
    ok, _ = positivity_check(IncentiveProfile.from_callable(lambda s: -np.log(s) - 1, N, singular=True))
    assert ok


def test_positivity_agrees_with_price_sign(c1_prices):
    for f in c1_prices:
        pi = PriceSchedule.from_callable(f, 2049)
        interior = pi.values[1:-1]
        if np.min(np.abs(interior)) < 1e-3:
            continue  # sign change too close to a node to resolve
        ok, where = positivity_check(apply_K(pi))
        assert ok == bool(np.all(interior > 0))
        if not ok:
            first = pi.pi.s[1:-1][np.argmax(interior <= 0)]
            assert where == pytest.approx(first)


def test_decreasing_incentive_gives_nonnegative_price():
    for v in (lambda s: np.cos(np.pi * s), lambda s: 0.5 - s, lambda s: np.exp(-3 * s) - (1 - np.exp(-3)) / 3):
        price = invert_K(IncentiveProfile.from_callable(v, N))
        assert price.values.min() > -1e-9


def test_grid_function_csv_round_trip(tmp_path):
    gf = GridFunction.from_callable(lambda s: np.sin(3 * s), 17)
    write_grid_function(tmp_path / "g.csv", gf)
    assert (tmp_path / "g.csv").read_text().splitlines()[0] == "s,value"
    back = read_grid_function(tmp_path / "g.csv")
    assert np.max(np.abs(back.values - gf.values)) < 1e-8


def test_transaction_cost_quadrature_oracle():
    # independent check of the seller-cost term on a smooth price
    f = lambda s: 1.0 + s * s  # noqa: E731
    prof = apply_transaction_costs(apply_K(PriceSchedule.from_callable(f, N)), TransactionCosts(seller_cost=0.4))
    x = 0.37
    ref = sint.quad(lambda t: (f(t) - 0.4) / t, x, 1.0)[0] - f(x)
    assert prof.v_i(x) == pytest.approx(ref, abs=1e-6)
