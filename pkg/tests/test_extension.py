import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from fracsing.core import constants
from fracsing.extension import (
    FitConditioningError,
    PoissonKernel,
    energy_identity_check,
    extend,
    extend_on_mesh,
    fourier_energy,
    neumann_trace,
)
from fracsing.fraclap import QuadConfig, frac_laplacian_point
from fracsing.lattice import GridFn, HalfGrid, HalfGridFn, graded_t

gauss = lambda x: np.exp(-np.sum(x * x, -1))


def gauss_grid(n, L=5.0, h=1 / 8, sigma=0.5, f=gauss):
    N = int(round(2 * L / h)) + 1
    return GridFn.from_function(f, [-L] * n, [L] * n, [N] * n, sigma)


def quad_extension_1d(x, t, sigma):
    """Independent oracle: adaptive quadrature of the kernel against exp(-y^2)."""
    pk = PoissonKernel(1, sigma)
    f = lambda y: pk(np.array([x - y]), t) * math.exp(-y * y)
    return integrate.quad(f, -8, 8, points=[x], limit=400, epsabs=1e-13)[0]


@pytest.mark.parametrize("n,sigma", [(1, 0.3), (2, 0.5), (3, 0.8)])
def test_kernel_positive(n, sigma):
    pk = PoissonKernel(n, sigma)
    z = np.random.default_rng(0).normal(size=(50, n))
    assert np.all(pk(z, 0.3) > 0)


@pytest.mark.parametrize("sigma", [0.3, 0.5, 0.7])
def test_kernel_unit_mass_1d(sigma):
    pk = PoissonKernel(1, sigma)
    m = 2 * integrate.quad(lambda z: pk(np.array([z]), 1.0), 0, np.inf, limit=200)[0]
    assert m == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("sigma", [0.3, 0.5, 0.7])
def test_extend_matches_quadrature_oracle(sigma):
    f = gauss_grid(1, sigma=sigma)
    targets = np.array([[0.0, 0.05], [0.4, 0.3], [1.1, 1.0], [-0.7, 0.01]])
    got = extend(f, targets, sigma)
    want = np.array([quad_extension_1d(x, t, sigma) for x, t in targets])
    assert np.max(np.abs(got - want)) < 1e-3


def test_extend_on_mesh_agrees_with_pointwise():
    f = gauss_grid(2, L=4.5, h=0.25, sigma=0.4)
    t = graded_t(2.0, 6, 0.4)
    F = extend_on_mesh(f, t, 0.4)
    idx = [(18, 18, 2), (14, 21, 4), (26, 9, 6)]
    pts = np.array([[F.mesh.x_axes[0][i], F.mesh.x_axes[1][j], t[k]] for i, j, k in idx])
    assert np.allclose(extend(f, pts, 0.4), [F.values[i] for i in idx], atol=2e-3)
    assert np.allclose(F.values[..., 0], f.values, rtol=0, atol=1e-8)  # ring zeroed


@settings(max_examples=15)
@given(st.lists(st.floats(0.1, 2.0), min_size=1, max_size=3), st.floats(0.2, 0.8))
def test_extension_positive_and_bounded(amps, sigma):
    def f(x):
        return sum(a * np.exp(-4 * np.sum((x - 0.3 * i) ** 2, -1)) for i, a in enumerate(amps))
    g = gauss_grid(1, L=4.0, h=1 / 16, sigma=sigma, f=f)
    F = extend_on_mesh(g, graded_t(3.0, 12, sigma), sigma)
    top = g.values.max()
    assert F.values.min() >= -1e-6 * top
    assert F.values.max() <= top * (1 + 1e-6)


def test_plateau_is_reproduced():
    # f = 1 on |x| < 4 (smoothly cut): the kernel has unit mass, and at
    # sigma = 1/2 the mass it puts outside |y| < 4 is about (2/pi)(t/4)
    plateau = lambda x: np.exp(-np.sum(x * x, -1) ** 4 / 4 ** 8)
    g = gauss_grid(1, L=12.0, h=1 / 8, sigma=0.5, f=plateau)
    vals = extend(g, np.array([[0.0, 0.0], [0.0, 0.01], [0.0, 0.1]]), 0.5)
    assert vals[0] == pytest.approx(1.0, abs=1e-6)  # cubic interpolant of the lattice data
    assert abs(vals[1] - 1) < 3e-3
    assert vals[0] > vals[1] > vals[2] > 1 - 0.1 / 4


def test_approximate_identity():
    g = gauss_grid(2, L=4.5, h=1 / 8, sigma=0.5)
    x = np.array([[0.3, -0.2], [1.0, 0.5]])
    errs = []
    ts = (0.5, 0.1, 0.02, 0.004)
    for t in ts:
        P = np.column_stack([x, np.full(len(x), t)])
        errs.append(np.max(np.abs(extend(g, P, 0.5) - gauss(x))))
    assert all(a > b for a, b in zip(errs, errs[1:])) and errs[-1] < 0.01
    # at sigma = 1/2, F - f = -t (-Delta)^{1/2} f + o(t): first-order decay
    rate = np.polyfit(np.log(ts[1:]), np.log(errs[1:]), 1)[0]
    assert rate == pytest.approx(1.0, abs=0.05)


def test_input_errors():
    g = gauss_grid(1, L=4.5, h=0.25)
    with pytest.raises(ValueError):
        extend(g, [[0.0, -0.1]])
    with pytest.raises(ValueError):
        extend(g, [[0.0, 0.1, 0.2]])
    wide = GridFn.from_function(lambda x: np.ones(len(x)), [-1], [1], [9], 0.5)
    with pytest.raises(ValueError):
        extend(wide, [[0.0, 0.1]])
    with pytest.raises(ValueError):
        extend(GridFn(g.lower, g.upper, g.values), [[0.0, 0.1]])  # sigma unknown


@pytest.mark.parametrize("sigma", [0.3, 0.5, 0.7])
def test_fourier_energy_closed_form(sigma):
    # unitary transform of exp(-|x|^2): (2)^{-n/2} exp(-|xi|^2/4)
    f1 = gauss_grid(1, L=6.0, h=1 / 16, sigma=sigma)
    assert fourier_energy(f1, sigma) == pytest.approx(2 ** (sigma - 0.5) * math.gamma(sigma + 0.5), rel=1e-4)
    f2 = gauss_grid(2, L=5.0, h=1 / 8, sigma=sigma)
    assert fourier_energy(f2, sigma) == pytest.approx(math.pi / 2 * 2 ** sigma * math.gamma(sigma + 1), rel=1e-3)


@pytest.mark.parametrize("sigma", [0.3, 0.5, 0.7])
def test_energy_identity_1d(sigma):
    f = gauss_grid(1, L=5.0, h=1 / 8, sigma=sigma)
    lhs, rhs, err = energy_identity_check(f, (1, sigma), pad_factor=2.0, core=5.0, check_convergence=False)
    assert rhs == pytest.approx(constants(1, sigma).N_sigma * fourier_energy(f, sigma))
    assert err < 0.01


def test_energy_identity_refinement_monotone():
    errs = []
    for h in (0.25, 0.125, 0.0625):
        f = gauss_grid(1, L=5.0, h=h, sigma=0.5)
        errs.append(energy_identity_check(f, (1, 0.5), pad_factor=0.25 / h, core=5.0,
                                          check_convergence=False)[2])
    assert errs[0] > errs[1] > errs[2]


def test_energy_identity_warns_on_coarse_t():
    f = gauss_grid(1, L=4.5, h=0.25, sigma=0.5)
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        lhs, rhs, err = energy_identity_check(f, (1, 0.5), growth=2.5)
    assert lhs > 0 and rhs > 0


@pytest.mark.parametrize("sigma", [0.2, 0.5, 0.9])
def test_neumann_trace_of_t_power(sigma):
    m = HalfGrid.uniform([0.0], [1.0], [5], 1.0, 8, sigma)
    F = m.sample(lambda P: P[:, 1] ** (2 * sigma))
    assert np.allclose(neumann_trace(F, sigma).values, -2 * sigma, rtol=1e-10)


@pytest.mark.parametrize("sigma", [0.2, 0.5, 0.8])
def test_neumann_trace_exact_on_three_term_model(sigma):
    m = HalfGrid.uniform([0.0], [1.0], [5], 1.0, 8, sigma)
    F = m.sample(lambda P: 2.0 + 3.0 * P[:, 0] + P[:, 1] ** (2 * sigma) - 0.5 * P[:, 1] ** 2)
    assert np.allclose(neumann_trace(F, sigma).values, -2 * sigma, rtol=1e-8)


def test_neumann_trace_two_term_fit_near_one():
    # sigma > 0.85 fits a + b t^{2 sigma} on two layers; an O(1) offset costs
    # about eps |F| / t_1^{2 sigma} in b, which the graded first layer makes visible
    sigma = 0.9
    m = HalfGrid.uniform([0.0], [1.0], [5], 1.0, 8, sigma)
    F = m.sample(lambda P: 2.0 + 3.0 * P[:, 0] + P[:, 1] ** (2 * sigma))
    bound = 2 * sigma * 64 * np.finfo(float).eps * 5.0 / m.t_nodes[1] ** (2 * sigma)
    assert np.max(np.abs(neumann_trace(F, sigma).values + 2 * sigma)) < bound


def test_neumann_trace_conditioning():
    m = HalfGrid(([0.0, 1.0],), np.array([0.0, 1.0, 1.0 + 1e-12, 2.0]))
    F = HalfGridFn(m, np.zeros(m.shape))
    with pytest.raises(FitConditioningError):
        neumann_trace(F, 0.5)


@pytest.mark.parametrize("sigma", [0.3, 0.5, 0.7])
def test_neumann_trace_is_scaled_fractional_laplacian(sigma):
    h = 1 / 32
    f = gauss_grid(1, L=5.0, h=h, sigma=sigma)
    tau = h / 4
    g = neumann_trace(extend_on_mesh(f, np.array([0, tau, 2 * tau, 4 * tau]), sigma), sigma)
    Ns = constants(1, sigma).N_sigma
    for x in (0.0, 0.5):
        exact = Ns * frac_laplacian_point(gauss, np.array([x]), (1, sigma), QuadConfig(check_tail=False))
        i = int(round((x + 5.0) / h))
        assert g.values[i] == pytest.approx(exact, rel=0.05)
