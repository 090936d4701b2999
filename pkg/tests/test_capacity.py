import math

import numpy as np
import pytest

from fracsing.capacity import (
    CapacityEstimate,
    cap_fourier,
    capacity_rows,
    covering_upper_bound,
    equivalence_check,
    extension_mesh_for,
    hausdorff_premeasure,
    mu_extension,
    tent_energy,
    tent_energy_exact,
)
from fracsing.core import constants
from fracsing.lattice import AffineStrip, BallUnion, EmptySet, GridFn, PointSet, SetUnion

P2 = (2, 0.5)


def ball(r, c=(0.0, 0.0)):
    return BallUnion([list(c)], [r])


def test_estimate_validation():
    with pytest.raises(ValueError):
        CapacityEstimate(-1.0, "fourier", {}, {})
    with pytest.raises(ValueError):
        CapacityEstimate(1.0, "magic", {}, {})


def test_empty_set_has_zero_capacity():
    assert cap_fourier(EmptySet(2), 0.1, P2).value == 0.0
    assert mu_extension(EmptySet(2), 1.0, P2, 0.1).value == 0.0


def test_cap_fourier_monotone_under_inclusion():
    kw = dict(half_width=0.8, extrapolate=False)
    small = cap_fourier(ball(0.1), 0.05, P2, **kw).value
    big = cap_fourier(ball(0.2), 0.05, P2, **kw).value
    union = cap_fourier(SetUnion((ball(0.1), PointSet([[0.3, 0.0]]))), 0.05, P2, **kw).value
    assert small <= big + 1e-8
    assert small <= union + 1e-8


def test_mu_extension_monotone_under_inclusion():
    mesh = extension_mesh_for(ball(0.2), 2, 0.5, 0.05, outer=1.5)
    a = mu_extension(ball(0.1), mesh, P2).value
    b = mu_extension(ball(0.2), mesh, P2).value
    assert 0 < a <= b + 1e-8


def test_cap_fourier_subadditive():
    kw = dict(half_width=1.0, extrapolate=False)
    A, B = ball(0.1, (-0.3, 0.0)), ball(0.1, (0.3, 0.0))
    ca = cap_fourier(A, 0.05, P2, **kw).value
    cb = cap_fourier(B, 0.05, P2, **kw).value
    cab = cap_fourier(SetUnion((A, B)), 0.05, P2, **kw).value
    assert cab <= (ca + cb) * 1.05
    assert cab >= max(ca, cb) - 1e-8


def test_mu_box_doubling_decreases():
    vals = [mu_extension(ball(0.1), outer, P2, 0.05).value for outer in (0.5, 1.0, 2.0)]
    assert vals[0] >= vals[1] - 1e-6 and vals[1] >= vals[2] - 1e-6


def test_potential_in_unit_interval():
    est, G = mu_extension(ball(0.15), 1.0, P2, 0.05, return_potential=True)
    assert G.values.min() >= -1e-6 and G.values.max() <= 1 + 1e-6
    assert est.extra["gmax"] == pytest.approx(1.0)


@pytest.mark.parametrize("sigma", [0.3, 0.5, 0.7])
def test_exact_discrete_scaling(sigma):
    # meshes, boxes and sets dilated together: both energies scale as r^{n - 2 sigma}
    q = 2 - 2 * sigma
    c1 = cap_fourier(ball(0.1), 0.05, (2, sigma)).value
    c2 = cap_fourier(ball(0.2), 0.1, (2, sigma)).value
    assert c2 / c1 == pytest.approx(2 ** q, rel=1e-6)
    m1 = mu_extension(ball(0.1), None, (2, sigma), 0.05).value
    m2 = mu_extension(ball(0.2), None, (2, sigma), 0.1).value
    assert m2 / m1 == pytest.approx(2 ** q, rel=1e-6)


def test_gridfn_sets_the_fourier_box():
    g = GridFn([-1, -1], [1, 1], np.zeros((41, 41)))
    est = cap_fourier(ball(0.2), g, P2, extrapolate=False)
    assert est.mesh["h"] == pytest.approx(0.05) and est.box["half_width"] == pytest.approx(1.0)


def test_lambda_outside_box_rejected():
    with pytest.raises(ValueError):
        cap_fourier(ball(0.5), 0.1, P2, half_width=0.5, extrapolate=False)


def test_point_capacity_decreases_under_refinement():
    L = PointSet([[0.0, 0.0]])
    vals = [mu_extension(L, 1.0, P2, h).value for h in (0.1, 0.05, 0.025)]
    assert vals[0] > vals[1] > vals[2] > 0
    assert np.polyfit(np.log([0.1, 0.05, 0.025]), np.log(vals), 1)[0] > 0.5


@pytest.mark.slow
def test_segment_capacity_decays_when_k_below_n_minus_2sigma():
    L = AffineStrip.coordinate(3, 1, extent=0.5)
    hs = [0.25, 0.125, 0.0625]
    vals = [mu_extension(L, 2.0, (3, 0.5), h, growth=1.25).value for h in hs]
    assert vals[0] > vals[1] > vals[2]
    assert np.polyfit(np.log(hs), np.log(vals), 1)[0] > 0


def test_translation_invariance_of_ratio():
    N = constants(2, 0.5).N_sigma
    ratios = []
    for c in [(0.0, 0.0), (0.3, -0.2), (0.11, 0.37)]:
        L = ball(0.25, c)
        mu = mu_extension(L, None, P2, 0.0625).value
        cap = cap_fourier(L, 0.0625, P2).value
        ratios.append(mu / (2 * N * cap))
    assert max(ratios) / min(ratios) < 1.02


def test_equivalence_check_single_level_logs():
    log = []
    r = equivalence_check(ball(0.25), P2, levels=1, log=log)
    assert len(log) == 1 and log[0]["ratio"] == r
    assert 0.8 < r < 1.2


@pytest.mark.parametrize("n,sigma", [(2, 0.5), (2, 0.2), (3, 0.7)])
def test_tent_energy_closed_form(n, sigma):
    assert tent_energy(n, sigma) == pytest.approx(tent_energy_exact(n, sigma), rel=1e-10)


def test_covering_examples():
    E = tent_energy(2, 0.5)
    assert covering_upper_bound([((0, 0), 0.3)], P2) == pytest.approx(E * 0.3)
    pts = [covering_upper_bound([((0, 0), r)], P2) for r in (0.1, 0.01, 0.001)]
    assert pts[0] > pts[1] > pts[2] and pts[2] == pytest.approx(E * 1e-3)
    # segment covered by m balls of radius 1/m in R^3, sigma = 1/2: q = 2 > 1
    E3 = tent_energy(3, 0.5)
    for m in (4, 16, 64):
        balls = [((i / m, 0, 0), 1 / m) for i in range(m)]
        assert covering_upper_bound(balls, (3, 0.5)) == pytest.approx(E3 * m ** (1 - 2), rel=1e-12)
    with pytest.raises(ValueError):
        covering_upper_bound([((0, 0), 0.0)], P2)


def test_mu_below_covering_bound():
    L = ball(0.25)
    mu = mu_extension(L, None, P2, 0.0625).value
    assert mu <= 1.1 * covering_upper_bound([((0, 0), 0.25)], P2)


def test_hausdorff_premeasure_examples():
    pt = PointSet([[0.1, 0.2]])
    vals = [hausdorff_premeasure(pt, 1.0, d) for d in (0.1, 0.05, 0.025)]
    assert vals[0] > vals[1] > vals[2]
    seg = AffineStrip.coordinate(2, 1, extent=0.5)
    ones = [hausdorff_premeasure(seg, 1.0, d) for d in (0.1, 0.05, 0.025, 0.0125)]
    assert all(0.5 <= v <= 4 for v in ones)
    assert max(ones) / min(ones) < 1.25
    three_halves = [hausdorff_premeasure(seg, 1.5, d) for d in (0.1, 0.05, 0.025, 0.0125)]
    assert all(a > b for a, b in zip(three_halves, three_halves[1:]))
    assert hausdorff_premeasure(EmptySet(2), 1.0, 0.1) == 0.0
    with pytest.raises(ValueError):
        hausdorff_premeasure(seg, 3.0, 0.1)
    with pytest.raises(ValueError):
        hausdorff_premeasure(seg, 1.0, 0.0)


def test_capacity_rows():
    est = cap_fourier(ball(0.1), 0.05, P2, extrapolate=False)
    (row,) = capacity_rows([est], P2, "ball")
    assert row["method"] == "fourier" and row["set"] == "ball" and float(row["value"]) == est.value
