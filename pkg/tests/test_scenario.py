import numpy as np
import pytest

from swarmseek.scenario import (Box, QuadraticSource, SourcePath,
                                analytic_constants, measure)

Q = np.array([[3.89, 0.45], [0.45, 5.86]])


def make_quad(path=None, region=None):
    path = path or SourcePath(kind="line", start=(1.0, -2.0),
                              velocity=(0.01, 0.0))
    region = region or Box((-10.0, -10.0), (10.0, 10.0))
    return QuadraticSource(Q, path, region)


def test_box_validation():
    with pytest.raises(ValueError):
        Box((0.0,), (1.0, 1.0))
    with pytest.raises(ValueError):
        Box((1.0, 0.0), (0.0, 1.0))


def test_box_contains_and_corners():
    b = Box((-1.0, 0.0), (1.0, 2.0))
    assert b.contains(np.array([0.0, 1.0]))
    assert b.contains(np.array([-1.0, 2.0]))   # boundary included
    assert not b.contains(np.array([1.5, 1.0]))
    corners = {tuple(c) for c in b.corners()}
    assert corners == {(-1.0, 0.0), (1.0, 0.0), (-1.0, 2.0), (1.0, 2.0)}


def test_box_sample_deterministic_and_inside():
    b = Box((-3.0, 2.0), (0.0, 4.0))
    a = b.sample(np.random.default_rng(5), 8)
    c = b.sample(np.random.default_rng(5), 8)
    np.testing.assert_array_equal(a, c)
    assert a.shape == (8, 2)
    assert all(b.contains(x) for x in a)


def test_line_path():
    p = SourcePath(kind="line", start=(1.0, 2.0), velocity=(0.5, -1.0))
    np.testing.assert_allclose(p.position(0), [1.0, 2.0])
    np.testing.assert_allclose(p.position(4), [3.0, -2.0])


def test_circle_path():
    p = SourcePath(kind="circle", center=(1.0, 1.0), radius=2.0,
                   rate=np.pi / 2, phase=0.0)
    np.testing.assert_allclose(p.position(0), [3.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(p.position(1), [1.0, 3.0], atol=1e-12)
    with pytest.raises(ValueError):
        SourcePath(kind="spiral")


def test_quadratic_validation():
    path = SourcePath(kind="line")
    region = Box((-1.0, -1.0), (1.0, 1.0))
    with pytest.raises(ValueError, match="square"):
        QuadraticSource(np.ones((2, 3)), path, region)
    with pytest.raises(ValueError, match="symmetric"):
        QuadraticSource(np.array([[1.0, 0.5], [0.0, 1.0]]), path, region)
    with pytest.raises(ValueError, match="positive definite"):
        QuadraticSource(np.array([[1.0, 0.0], [0.0, 0.0]]), path, region)


def test_quadratic_constants_are_hessian_eigenvalues():
    quad = make_quad()
    eig = np.linalg.eigvalsh(Q + Q.T)
    assert quad.lipschitz_L == pytest.approx(eig[-1])
    assert quad.polyak_s == pytest.approx(eig[0])


def test_evaluate_and_gradient_match_definitions():
    quad = make_quad()
    rng = np.random.default_rng(0)
    for k in (0, 3, 17):
        zeta = -(Q + Q.T) @ quad.path.position(k)
        np.testing.assert_allclose(quad.zeta(k), zeta)
        for _ in range(20):
            x = rng.uniform(-5, 5, 2)
            assert quad.evaluate(x, k) == pytest.approx(x @ Q @ x + zeta @ x)
            np.testing.assert_allclose(quad.true_gradient(x, k),
                                       (Q + Q.T) @ x + zeta)


def test_gradient_matches_finite_differences():
    quad = make_quad()
    rng = np.random.default_rng(1)
    eps = 1e-6
    for _ in range(50):
        x = rng.uniform(-5, 5, 2)
        g = quad.true_gradient(x, 2)
        for a in range(2):
            e = np.zeros(2)
            e[a] = eps
            fd = (quad.evaluate(x + e, 2) - quad.evaluate(x - e, 2)) / (2 * eps)
            assert g[a] == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_minimizer_follows_path_and_is_optimal():
    quad = make_quad()
    rng = np.random.default_rng(2)
    for k in (0, 5, 40):
        xs, fs = quad.minimizer(k)
        np.testing.assert_allclose(xs, quad.path.position(k))
        np.testing.assert_allclose(quad.true_gradient(xs, k),
                                   np.zeros(2), atol=1e-12)
        for _ in range(20):
            assert quad.evaluate(xs + rng.normal(size=2), k) >= fs


def test_batch_functions_match_scalar():
    quad = make_quad()
    xs = np.random.default_rng(3).uniform(-5, 5, (7, 2))
    vals = quad.evaluate_batch(xs, 4)
    grads = quad.gradient_batch(xs, 4)
    for i, x in enumerate(xs):
        assert vals[i] == pytest.approx(quad.evaluate(x, 4))
        np.testing.assert_allclose(grads[i], quad.true_gradient(x, 4))


def test_measure_exact_values_and_region_flags():
    quad = make_quad(region=Box((-2.0, -2.0), (2.0, 2.0)))
    pos = np.array([[0.5, 0.5], [3.0, 0.0]])
    y, inr = measure(quad, pos, 6)
    assert y[0] == pytest.approx(quad.evaluate(pos[0], 6))
    assert y[1] == pytest.approx(quad.evaluate(pos[1], 6))
    assert list(inr) == [True, False]


def test_lipschitz_audit_over_region():
    quad = make_quad()
    rng = np.random.default_rng(4)
    L = quad.lipschitz_L
    for _ in range(200):
        x, y = rng.uniform(-10, 10, (2, 2))
        lhs = np.linalg.norm(quad.true_gradient(x, 3) - quad.true_gradient(y, 3))
        assert lhs <= L * np.linalg.norm(x - y) + 1e-9


def test_analytic_constants_exact_for_line_path():
    # constant-velocity line: dzeta is constant, so eta0 has a closed form
    v = np.array([0.01, 0.0])
    quad = make_quad(path=SourcePath(kind="line", start=(0.0, 0.0),
                                     velocity=tuple(v)))
    region = Box((-10.0, -10.0), (10.0, 10.0))
    L, s, eta0, eta_star = analytic_constants(quad, region, 50)
    dz = -(Q + Q.T) @ v
    expected_eta0 = max(abs(c @ dz) for c in region.corners())
    assert eta0 == pytest.approx(expected_eta0, rel=1e-12)
    # optimal value of a translated quadratic changes round to round
    f0 = quad.minimizer(0)[1]
    f1 = quad.minimizer(1)[1]
    assert eta_star >= abs(f1 - f0) - 1e-12
    assert L == quad.lipschitz_L and s == quad.polyak_s


def test_drift_bound_against_direct_difference():
    quad = make_quad()
    region = quad.region
    L, s, eta0, eta_star = analytic_constants(quad, region, 30)
    rng = np.random.default_rng(6)
    for k in range(30):
        for _ in range(10):
            x = rng.uniform(-10, 10, 2)
            assert abs(quad.evaluate(x, k + 1) - quad.evaluate(x, k)) <= eta0 + 1e-9
        fk = quad.minimizer(k)[1]
        fk1 = quad.minimizer(k + 1)[1]
        assert abs(fk1 - fk) <= eta_star + 1e-9
