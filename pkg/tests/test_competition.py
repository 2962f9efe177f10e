import math

import numpy as np
import pytest
from scipy import integrate as sint

from mlincentive.competition import (
    CompetitionScenario,
    Good,
    UtilityDistribution,
    bare_resales_revenue,
    decision_bias,
    initial_rho,
    rho_b_general,
    rho_general,
    rho_weibull_closed,
    simulate_competition_abm,
    solve_dynamics,
    tabulated,
    weibull_1_2,
)
from mlincentive.errors import DomainError
from mlincentive.flux import PriceSchedule
from mlincentive.numerics import GridFunction
from mlincentive.scenarios import SpikeSpec, free_rider_scenario, spike

WEIBULL = weibull_1_2()
TRIANGLE = tabulated(np.linspace(0, 2, 41), 1 - np.abs(np.linspace(0, 2, 41) - 1))


def weibull_rho_oracle(delta):
    """Direct quadrature of 2u exp(-u^2) (1 - exp(-(u + delta)^2)) over u + delta > 0."""
    lo = max(0.0, -delta)
    val, _ = sint.quad(lambda u: 2 * u * math.exp(-u * u) * (1 - math.exp(-((u + delta) ** 2))), lo, np.inf, epsabs=1e-14, epsrel=1e-13)
    return val


def exponential_family():
    """Exponential utilities with mean 1 + p; not of translation form."""

    def pdf(p, x):
        lam = 1.0 / (1.0 + p)
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, lam * np.exp(-lam * x), 0.0)

    def cdf(p, x):
        lam = 1.0 / (1.0 + p)
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, -np.expm1(-lam * x), 0.0)

    return UtilityDistribution("exponential", pdf, cdf, translation=False)


def symmetric_scenario(eps, n=2049, m=0.3):
    g = Good(PriceSchedule(spike(SpikeSpec(m), n)), spike(SpikeSpec(0.5), n))
    return CompetitionScenario(g, g, eps)


# decision probabilities


def test_rho_basic_values():
    assert rho_general(WEIBULL, 0.4, 0.4, 0.0) == pytest.approx(0.5, abs=1e-12)
    assert rho_general(WEIBULL, 0.4, 0.4, math.inf) == 1.0
    assert rho_general(WEIBULL, 0.0, 0.0, 40.0) == pytest.approx(1.0, abs=1e-12)
    assert rho_general(WEIBULL, 0.0, 0.0, 1.0) == pytest.approx(weibull_rho_oracle(1.0), abs=1e-10)
    assert weibull_rho_oracle(1.0) == pytest.approx(0.93666, abs=1e-5)


def test_rho_closed_form_values():
    assert rho_weibull_closed(0.0) == 0.5
    assert rho_weibull_closed(1.0) == pytest.approx(0.93666, abs=1e-5)
    assert rho_weibull_closed(-1.0) == pytest.approx(0.06334, abs=1e-5)
    assert rho_weibull_closed(np.inf) == 1.0 and rho_weibull_closed(-np.inf) == 0.0


@pytest.mark.parametrize("delta", np.linspace(-5, 5, 41))
def test_closed_form_against_independent_quadrature(delta):
    assert abs(rho_weibull_closed(delta) - weibull_rho_oracle(delta)) < 1e-10


def test_alternative_closed_form_fails_symmetry():
    # replacing exp(-x^2)/2 by exp(-x^2/2) gives rho(0) = 0, which quadrature refutes
    def alt(x):
        c = math.sqrt(2 * math.pi) / 4
        return 1 - math.exp(-x * x / 2) + c * x * math.exp(-x * x / 2) * math.erfc(x / math.sqrt(2))

    assert alt(0.0) == 0.0
    assert weibull_rho_oracle(0.0) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("dist", [WEIBULL, TRIANGLE], ids=["weibull", "tabulated"])
def test_prop5_identities_on_lattice(dist):
    for p in (0.0, 0.3, 1.1):
        for q in (0.0, 0.5):
            for d in (-1.3, -0.2, 0.0, 0.7, 2.0):
                ra = rho_general(dist, p, q, d)
                assert ra == pytest.approx(1 - rho_b_general(dist, p, q, d), abs=1e-8)
                assert ra == pytest.approx(1 - rho_general(dist, q, p, -d), abs=1e-8)
                assert ra == pytest.approx(rho_b_general(dist, q, p, -d), abs=1e-8)


def test_rho_monotone_in_arguments():
    ps = np.linspace(0, 2, 9)
    vals = [rho_general(WEIBULL, p, 0.5, 0.1) for p in ps]
    assert np.all(np.diff(vals) > 0)
    vals = [rho_general(WEIBULL, 0.5, q, 0.1) for q in ps]
    assert np.all(np.diff(vals) < 0)
    vals = [rho_general(TRIANGLE, 0.2, 0.2, d) for d in np.linspace(-1.5, 1.5, 13)]
    assert np.all(np.diff(vals) > 0)


def test_weibull_concave_for_positive_bias():
    x = np.linspace(0, 5, 1001)[1:]
    r = rho_weibull_closed(x)
    assert np.max(np.diff(r, 2)) <= 1e-10


def test_translation_shift_matches_general_quadrature():
    for d in (-1.7, -0.4, 0.0, 0.9):
        assert TRIANGLE.rho_shift(d + 0.3 - 0.1) == pytest.approx(rho_general(TRIANGLE, 0.3, 0.1, d), abs=1e-10)


def test_stochastic_dominance_in_popularity():
    x = np.linspace(0, 4, 81)
    for dist in (WEIBULL, TRIANGLE, exponential_family()):
        assert np.all(dist.cdf(0.7, x) <= dist.cdf(0.2, x) + 1e-15)


def test_tabulated_rejects_bad_tables():
    with pytest.raises(DomainError):
        tabulated([0, 1, 2], [0, 2, 0])  # mass 2
    with pytest.raises(DomainError):
        tabulated([0.5, 1.0], [1.0, 1.0])
    with pytest.raises(DomainError):
        tabulated([0, 1], [-1.0, 3.0])


def test_unnormalised_distribution_is_a_domain_error():
    bad = UtilityDistribution("scaled", lambda p, x: 2 * WEIBULL.pdf(p, x), WEIBULL.cdf)
    with pytest.raises(DomainError):
        rho_general(bad, 0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        rho_general(WEIBULL, -0.1, 0.0, 0.0)


def test_general_family_without_translation():
    dist = exponential_family()
    for p, q in ((0.0, 0.0), (0.5, 0.0), (0.2, 1.3)):
        la, lb = 1 / (1 + p), 1 / (1 + q)
        assert rho_general(dist, p, q, 0.0) == pytest.approx(lb / (la + lb), abs=1e-10)
    with pytest.raises(DomainError):
        dist.rho_shift(0.0)


# biases and initial state


def test_bare_resales_revenue():
    n = 4097
    pop = spike(SpikeSpec(0.5), n)
    zero = bare_resales_revenue(Good(PriceSchedule.constant(0.0, n), pop))
    assert np.all(zero.values == 0.0)
    ur = bare_resales_revenue(Good(PriceSchedule(spike(SpikeSpec(0.5), n)), pop))
    assert not ur.singular
    # the kink of the spike costs O(h^2) in the product rule
    assert ur.values[0] == pytest.approx(1 + 2 * (math.log(2) - 0.5), abs=1e-7)
    assert ur.values[-1] == 0.0


def test_decision_bias_examples():
    sym = symmetric_scenario(0.7)
    for s in (0.1, 0.5, 0.9):
        assert decision_bias(s, s / 2, sym) == pytest.approx(0.0, abs=1e-15)
    fr = free_rider_scenario(0.5, 0.0)
    ur = bare_resales_revenue(fr.good_a)
    for s in (0.25, 0.6):
        expected = 0.5 * ur(s) - fr.good_a.price.pi(s)
        assert decision_bias(s, 0.1 * s, fr) == pytest.approx(expected, abs=1e-12)
    fr9 = free_rider_scenario(0.5, 0.9)
    assert decision_bias(0.4, 0.4, fr9) - decision_bias(0.4, 0.2, fr9) == pytest.approx(0.9, abs=1e-12)
    with pytest.raises(DomainError):
        decision_bias(0.0, 0.0, fr)


def test_initial_rho_cases():
    assert initial_rho(symmetric_scenario(0.4)).value == pytest.approx(0.5, abs=1e-12)
    fr0 = free_rider_scenario(0.5, 0.0)
    assert initial_rho(fr0).value == pytest.approx(rho_weibull_closed(math.log(2)), abs=1e-7)
    got = initial_rho(free_rider_scenario(0.5, 0.3))
    # independent scan of g(r) = rho(ln 2 + 0.3 (2r - 1)) - r
    r = np.linspace(0, 1, 10001)
    g = rho_weibull_closed(math.log(2) + 0.3 * (2 * r - 1)) - r
    crossings = np.nonzero(np.sign(g[:-1]) != np.sign(g[1:]))[0]
    assert len(crossings) == 1 and not got.multiple
    assert r[crossings[0]] <= got.value <= r[crossings[0] + 1]
    assert 0.5 < got.value < 1.0


def test_initial_rho_multiplicity_flag():
    res = initial_rho(symmetric_scenario(3.0))
    assert res.multiple and len(res.roots) == 3
    assert res.value == pytest.approx(0.5, abs=1e-12)


# dynamics


@pytest.mark.parametrize("eps", [0.0, 0.3, 0.9, 1.5, 3.0])
def test_identical_goods_split_evenly(eps):
    tr = solve_dynamics(symmetric_scenario(eps))
    assert np.max(np.abs(tr.share_a - tr.s / 2)) <= 1e-9
    assert tr.total_turnover_a == pytest.approx(tr.total_turnover_b, abs=1e-12)


def test_free_rider_qualitative():
    low = solve_dynamics(free_rider_scenario(0.5, 0.0))
    assert 0 < low.final_share_a < 0.5
    high = solve_dynamics(free_rider_scenario(0.5, 0.9))
    assert high.final_share_a > 0.5 and 2 * high.total_turnover_a > 0.5


@pytest.mark.parametrize("m,eps", [(0.1, 0.0), (0.5, 0.6), (0.9, 0.9)])
def test_trajectory_invariants(m, eps):
    tr = solve_dynamics(free_rider_scenario(m, eps))
    assert np.all(np.diff(tr.share_a) >= 0)
    assert np.all((tr.share_a >= 0) & (tr.share_a <= tr.s + 1e-15))
    assert np.all((tr.rho >= 0) & (tr.rho <= 1))
    assert np.allclose(tr.share_a + tr.share_b, tr.s, atol=0, rtol=0)
    assert tr.total_turnover_a <= 0.5 + 1e-9
    assert abs(tr.total_turnover_a - tr.turnover_by_share("a")) <= 1e-4
    assert abs(tr.total_turnover_b - tr.turnover_by_share("b")) <= 1e-4
    assert np.allclose(tr.vi_a_actual, tr.vr_a_actual - tr.pi_a)
    assert tr.vr_a_actual[-1] == 0.0


def test_turnover_matches_quadrature_of_solution():
    tr = solve_dynamics(free_rider_scenario(0.3, 0.6))
    ref = sint.trapezoid(tr.pi_a * tr.rho, tr.s)
    assert tr.total_turnover_a == pytest.approx(ref, abs=1e-6)


def test_heun_converges_under_refinement():
    a = solve_dynamics(free_rider_scenario(0.5, 0.9, n_points=1025)).final_share_a
    b = solve_dynamics(free_rider_scenario(0.5, 0.9, n_points=4097)).final_share_a
    assert abs(a - b) < 1e-5


def test_general_family_dynamics_runs():
    n = 129
    pop = spike(SpikeSpec(0.5), n)
    a = Good(PriceSchedule(spike(SpikeSpec(0.5), n)), pop)
    b = Good(PriceSchedule.constant(0.0, n), pop)
    tr = solve_dynamics(CompetitionScenario(a, b, 0.0, exponential_family()))
    assert 0 < tr.final_share_a < 0.5


def test_trajectory_columns():
    cols = solve_dynamics(free_rider_scenario(0.5, 0.3, n_points=65)).columns()
    assert list(cols)[:11] == [
        "s", "share_a", "rho", "delta", "du_i", "du_m", "t_a", "t_b",
        "vr_a_actual", "vi_a_actual", "ur_a_expected",
    ]
    assert {"share_b", "vr_b_actual", "vi_b_actual", "ur_b_expected"} <= set(cols)


def test_epsilon_must_be_nonnegative():
    g = symmetric_scenario(0.0).good_a
    with pytest.raises(DomainError):
        CompetitionScenario(g, g, -0.1)


# Monte-Carlo oracle


def test_abm_symmetric_split():
    sc = symmetric_scenario(0.0, n=4097)
    shares = [simulate_competition_abm(sc, 100000, seed).final_share_a for seed in range(3)]
    assert abs(np.mean(shares) - 0.5) <= 0.005


def test_abm_symmetric_strong_coupling_is_path_dependent():
    # feedback gain 2 eps rho'(0) > 1/2: early fluctuations persist, so the
    # final split is random although the continuum solution is s/2
    sc = symmetric_scenario(0.6, n=4097)
    shares = [simulate_competition_abm(sc, 100000, seed).final_share_a for seed in range(6)]
    assert np.std(shares) > 0.01


def test_abm_tracks_solver_band():
    sc = free_rider_scenario(0.5, 0.9)
    n_inf = 20000
    tr = solve_dynamics(sc)
    s = np.linspace(0, 1, 21)
    runs = [simulate_competition_abm(sc, n_inf, seed) for seed in range(3)]
    emp = np.mean([r.share_a_at(s) for r in runs], axis=0)
    assert np.max(np.abs(emp - np.interp(s, tr.s, tr.share_a))) < 3 / math.sqrt(n_inf)
    assert np.mean([r.final_share_a for r in runs]) > 0.5


def test_abm_requires_sampling_support():
    with pytest.raises(DomainError):
        simulate_competition_abm(free_rider_scenario(0.5, 0.0), 5, 0)
