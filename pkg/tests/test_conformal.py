import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsing.conformal import (
    KelvinMap,
    KelvinSingularError,
    Witness,
    constancy_certificate,
    first_violation,
    kelvin,
    moving_sphere_sweep,
    sweep_tolerance,
)
from fracsing.fraclap import bubble
from fracsing.lattice import GridFn, PointSet

P2 = (2, 0.5)
E2 = 2 - 2 * 0.5


def bubble_grid(h, half=4.0, sigma=0.5, n=2):
    N = int(round(2 * half / h)) + 1
    return GridFn.from_function(lambda y: bubble(y, (n, sigma)), [-half] * n, [half] * n, [N] * n, sigma)


LAMBDAS = np.round(np.arange(0.05, 2.0001, 0.01), 10)


def test_map_validation():
    with pytest.raises(ValueError):
        KelvinMap((0.0, 0.0), 0.0, 1.0)
    m = KelvinMap((0.0, 0.0), 1.0, 1.0)
    with pytest.raises(KelvinSingularError):
        kelvin(lambda p: np.ones(len(p)), m, [0.0, 0.0])
    with pytest.raises(ValueError):
        m.reflect(np.zeros((1, 4)))


def test_sphere_fixed_pointwise():
    rng = np.random.default_rng(0)
    c, lam = np.array([0.3, -0.1]), 0.7
    d = rng.normal(size=(100, 2))
    y = c + lam * d / np.linalg.norm(d, axis=1, keepdims=True)
    u = lambda p: np.exp(p[:, 0]) + p[:, 1] ** 2
    m = KelvinMap(c, lam, 1.3)
    assert np.allclose(kelvin(u, m, y), u(y), rtol=1e-13)


def test_constant_at_twice_radius():
    m = KelvinMap((1.0, 2.0), 0.5, 1.4)
    assert kelvin(lambda p: np.ones(len(p)), m, np.array([2.0, 2.0])) == pytest.approx(2 ** -1.4)


@pytest.mark.parametrize("dim", [2, 3])
def test_involution(dim):
    rng = np.random.default_rng(dim)
    m = KelvinMap(rng.normal(size=2), 0.8, 1.2)
    u = lambda p: 1 + np.sum(np.sin(p), axis=1) ** 2
    pts = rng.normal(size=(1000, dim)) * 2
    if dim == 3:
        pts[:, -1] = np.abs(pts[:, -1])
    twice = kelvin(m.transform(u), m, pts)
    assert np.max(np.abs(twice - u(pts)) / np.abs(u(pts))) < 1e-12


def test_half_space_preserved():
    m = KelvinMap((0.0, 0.0), 1.0, 1.0)
    img, _ = m.reflect(np.array([[0.3, 0.2, 0.5], [2.0, -1.0, 0.01]]))
    assert np.all(img[:, -1] > 0)


@settings(max_examples=30)
@given(st.floats(0.2, 5.0), st.floats(0.1, 2.0), st.floats(-2.0, 2.0), st.floats(0.5, 3.0))
def test_scaling_equivariance_on_powers(r, lam, x0, a):
    # u(y) = |y - z|^{-a}; u_r(y) = u(y/r) is a multiple of a shifted power
    e = 1.0
    z = np.array([0.4, -0.3])
    u = lambda p: np.linalg.norm(p - z, axis=1) ** (-a)
    ur = lambda p: u(p / r)
    x = np.array([x0, 0.7])
    y = np.array([[2.1, -1.3], [0.2, 3.3]])
    lhs = kelvin(ur, KelvinMap(x, lam, e), y)
    rhs = kelvin(u, KelvinMap(x / r, lam / r, e), y / r)
    assert np.allclose(lhs, rhs, rtol=1e-10)


def test_bubble_kelvin_invariant_at_unit_sphere():
    rng = np.random.default_rng(5)
    y = rng.normal(size=(1000, 2)) * 3
    w = lambda p: bubble(p, P2)
    assert np.allclose(kelvin(w, KelvinMap((0, 0), 1.0, E2), y), w(y), rtol=1e-12)


def test_bubble_strict_inequality_at_half():
    w = bubble_grid(0.1)
    pts = w.points()
    y = pts[np.linalg.norm(pts, axis=1) > 0.5 + 1e-9]
    kv = kelvin(lambda p: bubble(p, P2), KelvinMap((0, 0), 0.5, E2), y)
    assert np.all(kv < bubble(y, P2))
    assert first_violation(w, (0, 0), 0.5, E2) is None


def test_sweep_bubble_and_refinement():
    prev = None
    for h in (0.2, 0.1, 0.05):
        lb = moving_sphere_sweep(bubble_grid(h), (0.0, 0.0), LAMBDAS)
        assert abs(lb - 1.0) <= 2 * h
        if prev is not None:
            assert abs(lb - 1) <= abs(prev - 1) + 1e-12
        prev = lb


def test_sweep_constant_passes_everything():
    w = GridFn.from_function(lambda p: np.full(len(p), 3.0), [-2, -2], [2, 2], (21, 21), 0.5)
    assert moving_sphere_sweep(w, (0.0, 0.0), LAMBDAS) == LAMBDAS[-1]
    assert moving_sphere_sweep(w, (0.0, 0.0), [0.1], tol=0.0) == 0.1


def test_sweep_returns_zero_when_first_lambda_fails():
    w = bubble_grid(0.1)
    assert moving_sphere_sweep(w, (0.0, 0.0), [1.5, 1.6], tol=0.0) == 0.0


def test_sweep_monotone_in_tolerance():
    w = bubble_grid(0.1)
    vals = [moving_sphere_sweep(w, (0.0, 0.0), LAMBDAS, tol=t) for t in (0.0, 1e-3, 1e-2, 5e-2, 0.2)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_sweep_validation():
    w = bubble_grid(0.2)
    with pytest.raises(ValueError):
        moving_sphere_sweep(w, (0, 0), [0.5, 0.4])
    with pytest.raises(ValueError):
        moving_sphere_sweep(GridFn(w.lower, w.upper, w.values), (0, 0), [0.5])


def test_tolerance_formula():
    w = bubble_grid(0.1)
    assert sweep_tolerance(w) == pytest.approx(1e-6 + 0.2 * w.lipschitz())


def test_lambda_tube_excluded():
    # a spike on Lambda would violate every sphere; excluding its 2h tube hides it
    w = bubble_grid(0.1)
    v = w.values.copy()
    v[40, 40] = 1e-6
    spiky = w.with_values(v)
    L = PointSet([[0.0, 0.0]])
    assert first_violation(spiky, (1.0, 0.0), 0.5, E2) is not None
    assert first_violation(spiky, (1.0, 0.0), 0.5, E2, L=L) is None


def test_certificate_examples():
    c = GridFn.from_function(lambda p: np.full(len(p), 2.0), [-2, -2], [2, 2], (21, 21), 0.5)
    centers = [(0.0, 0.0), (0.5, -0.5), (-1.0, 0.3)]
    assert constancy_certificate(c, centers, LAMBDAS) == (True, None)
    w = bubble_grid(0.1)
    ok, wit = constancy_certificate(w, [(0.0, 0.0)], [0.5, 1.5])
    assert not ok and isinstance(wit, Witness) and wit.lam > 1 and wit.x == (0.0, 0.0)
    assert wit.kelvin_value > wit.value
    assert set(wit.to_dict()) == {"x", "lambda", "y", "kelvin", "w"}
    assert constancy_certificate(w, [(0.0, 0.0)], LAMBDAS[LAMBDAS <= 1.0]) == (True, None)
