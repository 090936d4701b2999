"""Acceptance criteria, one PASS/FAIL line each.

The default full suite is run once per session and most criteria read its
summary; criteria 8 and 9 need extra singular sets and run those directly.
Run with ``pytest -s tests/test_acceptance.py`` or look for the ``ACCEPT``
lines in the verbose log.
"""

import json
import time

import pytest

from fracsing.cli import RunConfig, resolve, run
from fracsing.experiments import run_experiment

pytestmark = pytest.mark.slow


@pytest.fixture(scope="session")
def suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("suite")
    t0 = time.perf_counter()
    code = run(RunConfig("full-suite", seed=0, output_dir=str(out)))
    wall = time.perf_counter() - t0
    summary = json.loads((out / "summary.json").read_text())
    checks = {(c["experiment"], c["name"]): c for c in summary["checks"]}
    return dict(code=code, wall=wall, summary=summary, checks=checks,
                csv=(out / "results.csv").read_bytes())


@pytest.fixture
def report(capsys):
    def emit(num, title, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPT {'PASS' if ok else 'FAIL'} [{num:2d}] {title}: {detail}")
        assert ok, detail
    return emit


def _gather(suite, experiment, names, budget):
    cs = [suite["checks"][(experiment, n)] for n in names]
    rt = suite["summary"]["runtime_s"][experiment]
    ok = all(c["pass"] for c in cs) and rt < budget
    detail = "; ".join(f"{c['name']}={c['measured']:.3g}" if isinstance(c["measured"], float)
                       else f"{c['name']}={c['measured']}" for c in cs)
    return ok, f"{detail}; runtime {rt:.2f}s (< {budget}s)"


def _single(experiment, **kw):
    s = resolve(RunConfig(experiment, **kw))
    return run_experiment(s)


def test_01_constants(suite, report):
    ok, d = _gather(suite, "constants",
                    ["gamma_recurrence", "N_sigma_half_is_one", "poisson_unit_integral"], 1.0)
    report(1, "constants", ok, d)


def test_02_fractional_laplacian(suite, report):
    ok, d = _gather(suite, "fraclap-check", ["cosine_symbol", "bubble_residual"], 30.0)
    report(2, "fractional Laplacian", ok, d)


def test_03_energy_identity(suite, report):
    ok, d = _gather(suite, "extension-check", ["energy_identity_n1", "energy_identity_n2"], 120.0)
    report(3, "energy identity", ok, d)


def test_04_neumann_trace(suite, report):
    ok, d = _gather(suite, "extension-check", ["neumann_trace_consistency"], 120.0)
    report(4, "Neumann trace vs fractional Laplacian", ok, d)


def test_05_solver_exactness(suite, report):
    ok, d = _gather(suite, "solve", ["reproduces_constants", "reproduces_t_power",
                                     "dirichlet_principle", "flux_conservation"], 60.0)
    report(5, "solver exactness", ok, d)


def test_06_capacity_equivalence(suite, report):
    ok, d = _gather(suite, "equivalence", ["equivalence_ratio", "equivalence_trend"], 300.0)
    report(6, "capacity equivalence", ok, d)


def test_07_capacity_scaling(suite, report):
    ok, d = _gather(suite, "capacity",
                    ["scaling_exponent_cap_fourier", "scaling_exponent_mu_extension"], 300.0)
    report(7, "capacity scaling", ok, d)


def test_08_zero_capacity_trend(report):
    parts, ok = [], True
    for n, spec in ((2, "point(0,0)"), (3, "strip(1;0.5)")):
        out = _single("capacity", n=n, sigma=0.5, set=spec, levels=3)
        c = {c.name: c for c in out.checks}["zero_capacity_trend"]
        ok &= c.passed and out.runtime < 300
        parts.append(f"{spec} n={n} decay exponent={c.measured:.3g} runtime {out.runtime:.1f}s")
    report(8, "zero-capacity trend", ok, "; ".join(parts))


def test_09_maximum_principle(suite, report):
    c = suite["checks"][("solve", "maximum_principle")]
    ok = c["pass"]
    parts = [f"point margin/sup={c['measured']:.3g}"]
    out = _single("solve", n=2, sigma=0.5, set="strip(1;0.5)")
    cs = {c.name: c for c in out.checks}["maximum_principle"]
    ok &= cs.passed and out.runtime < 60
    parts.append(f"segment margin/sup={cs.measured:.3g} runtime {out.runtime:.1f}s")
    report(9, "maximum principle", ok, "; ".join(parts))


def test_10_harnack(suite, report):
    ok, d = _gather(suite, "solve", ["harnack_stable"], 60.0)
    report(10, "Harnack quotient stability", ok, d)


def test_11_moving_sphere(suite, report):
    ok, d = _gather(suite, "movesphere", ["bubble_lambda_bar", "bubble_has_witness",
                                          "constant_no_witness"], 120.0)
    report(11, "moving sphere", ok, d)


def test_12_blowup_bound(suite, report):
    ok, d = _gather(suite, "blowup", ["cylinder_slope_exact", "semilinear_bound_ok",
                                      "supercritical_rejected"], 180.0)
    report(12, "blow-up bound", ok, d)


def test_13_symmetry_ratio(suite, report):
    ok, d = _gather(suite, "symmetry", ["cylinder_ratio_one", "tilted_linear_decay",
                                        "tilted_below_bound"], 60.0)
    report(13, "symmetry ratio", ok, d)


def test_14_poincare(suite, report):
    ok, d = _gather(suite, "poincare", ["dilation_invariance", "family_finite"], 60.0)
    report(14, "Poincare scaling", ok, d)


def test_15_gamma_ratio(suite, report):
    ok, d = _gather(suite, "constants", ["gamma_ratio_sweep_positive", "gamma_ratio_counter_case"],
                    1.0)
    report(15, "Gamma-ratio condition", ok, d)


def test_16_determinism_and_budget(suite, report, tmp_path):
    t0 = time.perf_counter()
    code = run(RunConfig("full-suite", seed=0, output_dir=str(tmp_path)))
    wall = time.perf_counter() - t0
    same = (tmp_path / "results.csv").read_bytes() == suite["csv"]
    ok = same and suite["code"] == 0 and code == 0 and max(wall, suite["wall"]) < 600
    report(16, "full-suite determinism and budget", ok,
           f"byte-identical={same}; exit codes {suite['code']},{code}; "
           f"wall {suite['wall']:.0f}s and {wall:.0f}s (< 600s)")
