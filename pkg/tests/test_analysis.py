import numpy as np
import pytest

from swarmseek import analysis


def test_delta_bar_arithmetic():
    assert analysis.delta_bar(1.0, 2.0, 3.0, 2.0) == 9.0
    with pytest.raises(ValueError):
        analysis.delta_bar(-1.0, 2.0, 3.0, 2.0)


def test_neighborhood_m_formula_and_preconditions():
    m, contraction = analysis.neighborhood_M(0.5, 0.25, 0.1, 2.0, 3.0)
    assert m == pytest.approx(0.75 / (2 * 0.1 * 4) + 9.0 / 16.0)
    assert contraction == pytest.approx(0.8)
    with pytest.raises(ValueError):
        analysis.neighborhood_M(0.5, 0.25, 1.0, 2.0, 3.0)   # alpha*s = 2
    with pytest.raises(ValueError):
        analysis.neighborhood_M(0.5, 0.25, -0.1, 2.0, 3.0)


def test_recursive_step():
    out = analysis.recursive_bound(10.0, 0.5, 0.25, 0.1, 2.0, 3.0)
    assert out == pytest.approx(0.8 * 10 + 0.75 + 0.05 * 9)
    with pytest.raises(ValueError):
        analysis.recursive_bound(-1.0, 0.5, 0.25, 0.1, 2.0, 3.0)


def random_params(rng):
    s = rng.uniform(0.1, 5.0)
    alpha = rng.uniform(0.01, 0.99) / s       # 0 < s*alpha < 1
    eta0 = rng.uniform(0.0, 2.0)
    eta_star = rng.uniform(0.0, 2.0)
    dbar = rng.uniform(0.0, 4.0)
    return eta0, eta_star, alpha, s, dbar


def test_unrolled_recursion_equals_analytic():
    rng = np.random.default_rng(0)
    for _ in range(300):
        eta0, eta_star, alpha, s, dbar = random_params(rng)
        g = g0 = rng.uniform(0.0, 50.0)
        for k in range(40):
            g = analysis.recursive_bound(g, eta0, eta_star, alpha, s, dbar)
            ana = analysis.analytic_bound(g0, k, eta0, eta_star, alpha, s, dbar)
            assert g == pytest.approx(ana, rel=1e-9, abs=1e-12)


def test_bound_limit_is_fixed_point():
    rng = np.random.default_rng(1)
    for _ in range(100):
        eta0, eta_star, alpha, s, dbar = random_params(rng)
        lim = analysis.bound_limit(eta0, eta_star, alpha, s, dbar)
        assert analysis.recursive_bound(lim, eta0, eta_star, alpha, s,
                                        dbar) == pytest.approx(lim, rel=1e-9)


def test_distance_bound_limit_is_m():
    rng = np.random.default_rng(2)
    for _ in range(100):
        eta0, eta_star, alpha, s, dbar = random_params(rng)
        m, _ = analysis.neighborhood_M(eta0, eta_star, alpha, s, dbar)
        d = analysis.distance_bound(12.0, 100000, eta0, eta_star, alpha, s, dbar)
        assert d == pytest.approx(m, rel=1e-6)
        # anchored at the initial squared distance
        d0 = analysis.distance_bound(12.0, -1, eta0, eta_star, alpha, s, dbar)
        assert d0 == pytest.approx(12.0, rel=1e-9)


def test_estimate_rho_gamma():
    rounds, n, d = 10, 2, 2
    positions = np.zeros((rounds, n, d))
    positions[:, 1, 0] = 2.0          # constant neighbour distance 2
    estimates = np.zeros((rounds, n, d))
    estimates[5, 0] = [3.0, 4.0]      # norm 5 after burn-in
    estimates[2, 0] = [30.0, 40.0]    # before burn-in: ignored
    estimates[6, 1] = [np.nan, np.nan]  # failed round: ignored
    rho, gamma = analysis.estimate_rho_gamma(
        positions, estimates, [[1], [0]], k0=4)
    assert gamma[0] == pytest.approx(5.0)
    assert gamma[1] == pytest.approx(0.0)
    np.testing.assert_allclose(rho, [3.0, 3.0])   # 1.5 * max distance
    rho, gamma = analysis.estimate_rho_gamma(
        positions, estimates, [[1], [0]], k0=4,
        gamma_override=7.0, rho_override=1.0)
    np.testing.assert_allclose(gamma, [7.0, 7.0])
    np.testing.assert_allclose(rho, [1.0, 1.0])
    with pytest.raises(ValueError):
        analysis.estimate_rho_gamma(positions, estimates, [[1], [0]], k0=10)


def test_detect_burn_in():
    phis = np.array([10.0, 8.0, 6.0, 7.0, 5.0])
    assert analysis.detect_burn_in(phis, 6.0, 0.1) == 2
    assert analysis.detect_burn_in(phis, 1.0, 0.1) is None
    assert analysis.detect_burn_in(np.array([]), 1.0, 0.1) is None


def test_track_bounds_shapes_and_anchor():
    rounds = 20
    gaps = np.linspace(10.0, 1.0, rounds)
    deltas = np.full(rounds, 2.0)
    alphas = np.full(rounds, 0.05)
    rec, ana, dist = analysis.track_bounds(gaps, deltas, alphas, k0=5,
                                           eta0=0.1, eta_star=0.1, s=2.0,
                                           dbar_static=3.0)
    assert np.all(np.isnan(rec[:5])) and np.all(np.isnan(ana[:5]))
    assert rec[5] == gaps[5] and ana[5] == gaps[5]
    assert dist[5] == pytest.approx(gaps[5] / 4.0)
    # constant alpha: recursive and analytic tracks agree
    np.testing.assert_allclose(rec[5:], ana[5:], rtol=1e-9)


def test_track_bounds_conservative_with_varying_alpha():
    rounds = 30
    gaps = np.full(rounds, 5.0)
    deltas = np.full(rounds, 1.0)
    rng = np.random.default_rng(3)
    alphas = rng.uniform(0.02, 0.08, rounds)
    rec, ana, dist = analysis.track_bounds(gaps, deltas, alphas, k0=0,
                                           eta0=0.2, eta_star=0.1, s=2.0,
                                           dbar_static=1.0)
    # worst-alpha recursion dominates the same recursion run with any of the
    # realized alphas held fixed
    a_min, a_max = alphas.min(), alphas.max()
    g = gaps[0]
    for k in range(1, rounds):
        g = (1 - 2.0 * a_min) * g + 0.2 + 0.1 + 0.5 * a_max * 1.0
        assert rec[k] == pytest.approx(g, rel=1e-12)
    empty = analysis.track_bounds(gaps, deltas, np.full(rounds, np.nan),
                                  k0=0, eta0=0.2, eta_star=0.1, s=2.0,
                                  dbar_static=1.0)
    assert all(np.all(np.isnan(t)) for t in empty)
