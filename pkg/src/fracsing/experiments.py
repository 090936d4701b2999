"""Experiment bodies driven by the command line.

Each experiment takes a resolved :class:`Settings` and a seeded generator
and returns an :class:`Outcome`: flat result rows, named checks and
two-column plot series.  Nothing here touches the filesystem.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import capacity as capm
from .conformal import constancy_certificate, moving_sphere_sweep
from .core import constants, gamma, gamma_ratio_condition, poisson_unit_integral
from .extension import _chi, energy_identity_check, extend, extend_on_mesh, neumann_trace
from .fraclap import (
    QuadConfig,
    bubble,
    bubble_constant,
    bubble_constant_exact,
    cylinder_constant,
    cylinder_constant_exact,
    cylindrical_solution,
    frac_laplacian_point,
)
from .lattice import (
    AffineStrip,
    BallUnion,
    GridFn,
    HalfGrid,
    PointSet,
    SingularSet,
    parse_set,
)
from .probes import blowup_exponent, poincare_ratio, poincare_x1_exact, symmetry_ratio
from .solver import (
    MixedBVP,
    assemble,
    energy_functional,
    flux_residual,
    harnack_quotient,
    max_principle_margin,
    solve_linear,
    solve_semilinear,
)

__all__ = ["Check", "Outcome", "Settings", "EXPERIMENTS", "DEFAULTS", "run_experiment"]


@dataclass(frozen=True)
class Settings:
    experiment: str
    n: int
    sigma: float
    k: int
    set: str | None
    levels: int
    seed: int
    explicit_n: bool = False


@dataclass
class Check:
    name: str
    anchor: str
    measured: float
    target: str
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "measured": _num(self.measured),
                "target": self.target, "tolerance": self.tolerance, "pass": bool(self.passed)}


@dataclass
class Outcome:
    experiment: str
    rows: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    plots: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)
    runtime: float = 0.0

    def row(self, s: Settings, quantity: str, value, level="", detail="", set_desc=None):
        self.rows.append({
            "experiment": self.experiment, "quantity": quantity, "n": s.n,
            "sigma": s.sigma, "k": s.k, "set": set_desc if set_desc is not None else (s.set or ""),
            "level": level, "detail": detail, "value": _fmt(value),
        })

    def check(self, name, anchor, measured, target, tolerance, passed):
        self.checks.append(Check(name, anchor, float(measured), target, float(tolerance),
                                 bool(passed)))

    def plot(self, name, xs, ys):
        self.plots[name] = [(float(x), float(y)) for x, y in zip(xs, ys)]


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _monotone_down(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


# ---------------------------------------------------------------- constants


def exp_constants(s: Settings, rng) -> Outcome:
    out = Outcome("constants")
    x = rng.uniform(0.05, 12.0, 100)
    rec = max(abs(gamma(v + 1) - v * gamma(v)) / abs(gamma(v + 1)) for v in x)
    out.row(s, "gamma_recurrence_max_relerr", rec)
    out.check("gamma_recurrence", "Prop 2.1", rec, "< 1e-10", 1e-10, rec < 1e-10)

    n_half = constants(2, 0.5).N_sigma
    out.row(s, "N_sigma(0.5)", n_half)
    out.check("N_sigma_half_is_one", "Prop 2.1", abs(n_half - 1), "N(0.5) = 1", 1e-12,
              abs(n_half - 1) < 1e-12)

    c = constants(s.n, s.sigma)
    for name in ("c_frac", "N_sigma", "beta_poisson", "crit_exp"):
        out.row(s, name, getattr(c, name))

    worst = 0.0
    cases = sorted({(2, 0.25), (2, 0.5), (2, 0.75), (3, 0.25), (3, 0.5), (3, 0.75), (s.n, s.sigma)})
    for n, sg in cases:
        err = abs(poisson_unit_integral(n, sg) - 1.0)
        worst = max(worst, err)
        out.row(s, "poisson_unit_integral_err", err, detail=f"n={n};sigma={sg}")
    out.check("poisson_unit_integral", "Prop 2.1", worst, "|mass - 1| < 1e-4", 1e-4, worst < 1e-4)

    val, ok = gamma_ratio_condition(s.n, s.k, s.sigma)
    out.row(s, "gamma_ratio", val)
    bad = 0
    total = 0
    for n in range(2, 9):
        for k in range(0, n):
            for sg in np.round(np.arange(0.05, 0.951, 0.05), 2):
                if k < (n - 2 * sg) / 2:
                    total += 1
                    bad += not gamma_ratio_condition(n, k, float(sg))[1]
    out.row(s, "gamma_ratio_sweep_cases", total)
    out.check("gamma_ratio_sweep_positive", "Sec 6 (eq:dimrest)", bad, "0 nonpositive", 0, bad == 0)
    cval, cok = gamma_ratio_condition(4, 2, 0.9)
    out.row(s, "gamma_ratio(4,2,0.9)", cval)
    out.check("gamma_ratio_counter_case", "Sec 6 (eq:dimrest)", cval, "< 0", 0, cval < 0)
    return out


# ---------------------------------------------------------------- fraclap


def exp_fraclap(s: Settings, rng) -> Outcome:
    out = Outcome("fraclap-check")
    n, sg = s.n, s.sigma
    xi = np.zeros(n)
    xi[0] = 1.0
    cosine = lambda y: np.cos(np.asarray(y, float) @ xi)
    pts = rng.uniform(-1.0, 1.0, (4, n))
    worst = 0.0
    for p in pts:
        val = frac_laplacian_point(cosine, p, (n, sg))
        exact = float(np.linalg.norm(xi)) ** (2 * sg) * cosine(p)
        if abs(exact) > 0.2:
            worst = max(worst, abs(val / exact - 1))
    out.row(s, "cosine_symbol_max_relerr", worst)
    out.check("cosine_symbol", "Eq (eq:cl5)", worst, "< 1%", 0.01, worst < 0.01)

    if n > 2 * sg:
        cb = bubble_constant_exact(n, sg)
        cb_num = bubble_constant((n, sg))
        out.row(s, "bubble_constant_exact", cb)
        out.row(s, "bubble_constant_numeric", cb_num)
        crit = (n + 2 * sg) / (n - 2 * sg)
        ys = rng.uniform(-2.0, 2.0, (20, n))
        q = QuadConfig(tail_exponent_assumed=n - 2 * sg)
        res = []
        for y in ys:
            lhs = frac_laplacian_point(lambda z: bubble(z, (n, sg)), y, (n, sg), q)
            rhs = cb * bubble(y, (n, sg)) ** crit
            res.append(abs(lhs - rhs) / abs(rhs))
        worst = max(res)
        out.row(s, "bubble_residual_max_relerr", worst)
        out.plot("bubble_residual", np.linalg.norm(ys, axis=1), res)
        out.check("bubble_residual", "Eq (eq:cl5)", worst, "< 2%", 0.02, worst < 0.02)

    m = n - s.k
    pexp = (n - 2 * sg) / 2
    if s.k <= n - 2 * sg and pexp < m:
        exact = cylinder_constant_exact(n, s.k, sg)
        num = cylinder_constant((n, sg), k=s.k)
        err = abs(num - exact) / max(abs(exact), 1e-300)
        out.row(s, "cylinder_constant_exact", exact)
        out.row(s, "cylinder_constant_numeric", num)
        out.check("cylinder_constant", "Thm 1.3", err, "rel < 1e-6", 1e-6, err < 1e-6)
    return out


# ---------------------------------------------------------------- extension


def _energy_recipe(n):
    # (half-width, coarsest h, pad factor per level, fine t-core)
    if n == 1:
        return 5.0, 0.25, lambda l: 2.0 ** l, 5.0
    return 4.5, 0.5, lambda l: 0.5, 2.0


def exp_extension(s: Settings, rng) -> Outcome:
    out = Outcome("extension-check")
    dims = [min(s.n, 2)] if s.explicit_n else [1, 2]
    gauss = lambda x: np.exp(-np.sum(x * x, -1))
    for n in dims:
        L, h0, padf, core = _energy_recipe(n)
        errs, hs = [], []
        for lev in range(s.levels):
            h = h0 / 2 ** lev
            N = int(round(2 * L / h)) + 1
            f = GridFn.from_function(gauss, [-L] * n, [L] * n, [N] * n, s.sigma)
            lhs, rhs, err = energy_identity_check(f, (n, s.sigma), pad_factor=padf(lev), core=core,
                                                  check_convergence=False)
            errs.append(err)
            hs.append(h)
            out.row(s, "energy_identity_relerr", err, level=lev, detail=f"dim={n};h={h}",
                    set_desc="gaussian")
        out.plot(f"energy_identity_n{n}", hs, errs)
        ok = errs[-1] < 0.05 and (len(errs) < 2 or _monotone_down(errs))
        out.check(f"energy_identity_n{n}", "Prop 2.1", errs[-1], "< 5%, monotone", 0.05, ok)

    n = min(s.n, 2)
    L, h = (5.0, 1 / 32) if n == 1 else (4.5, 1 / 8)
    N = int(round(2 * L / h)) + 1
    Ns = constants(n, s.sigma).N_sigma
    cut = lambda x: _chi(np.linalg.norm(x, axis=-1) / 4.0)
    funcs = {
        "gaussian": gauss,
        "bubble_cut": lambda x: bubble(x, (n, s.sigma)) * cut(x),
        "cosine_cut": lambda x: np.cos(x[..., 0]) * cut(x),
    }
    tau = h / 4
    t = np.array([0.0, tau, 2 * tau, 4 * tau])
    probe_pts = np.array([[0.0] * n, [0.5] + [0.0] * (n - 1), [1.25] + [0.25] * (n - 1)])
    q = QuadConfig(check_tail=False)
    worst = 0.0
    for name, u in funcs.items():
        f = GridFn.from_function(u, [-L] * n, [L] * n, [N] * n, s.sigma)
        g = neumann_trace(extend_on_mesh(f, t, s.sigma), s.sigma)
        idx = [tuple(np.round((p - np.asarray(f.lower)) / h).astype(int)) for p in probe_pts]
        exact = np.array([Ns * frac_laplacian_point(u, p, (n, s.sigma), q) for p in probe_pts])
        num = np.array([g.values[i] for i in idx])
        # relative to the largest probed value: pointwise ratios blow up near sign changes
        errs = np.abs(num - exact) / np.max(np.abs(exact))
        worst = max(worst, float(errs.max()))
        for p, e in zip(probe_pts, errs):
            out.row(s, "neumann_vs_fraclap_relerr", e, detail=f"{name};x={p.tolist()}",
                    set_desc=name)
    out.check("neumann_trace_consistency", "Sec 1 (Neumann trace)", worst, "< 5%", 0.05,
              worst < 0.05)
    return out


# ---------------------------------------------------------------- solve


def _default_set(s: Settings, fallback: str) -> SingularSet:
    return parse_set(s.set or fallback, s.n)


def _bubble_extension_data(n, sigma):
    """Dirichlet data for the bubble's extension (closed form at sigma = 1/2)."""
    if abs(sigma - 0.5) < 1e-14:
        return lambda P: ((1 + P[:, -1]) ** 2 + np.sum(P[:, :-1] ** 2, 1)) ** (-(n - 1) / 2)
    L, h = 8.0, 0.25
    N = int(2 * L / h) + 1
    f = GridFn.from_function(lambda y: bubble(y, (n, sigma)), [-L] * n, [L] * n, [N] * n, sigma)

    def data(P):
        out = np.empty(len(P))
        top = P[:, -1] > 0
        out[~top] = bubble(P[~top, :-1], (n, sigma))
        if top.any():
            out[top] = extend(f, P[top], sigma)
        return out
    return data


def exp_solve(s: Settings, rng) -> Outcome:
    out = Outcome("solve")
    n, sg = s.n, s.sigma
    N = 17 if n == 2 else 9
    mesh = HalfGrid.uniform([-1.0] * n, [1.0] * n, (N,) * n, 1.0, N, sg)

    U = solve_linear(assemble(MixedBVP(sg, 1.0), mesh), tol=1e-13)
    err = float(np.max(np.abs(U.values - 1.0)))
    out.row(s, "constant_sup_error", err)
    out.check("reproduces_constants", "Eq (eq:ex0)", err, "< 1e-10", 1e-10, err < 1e-10)

    bvp = MixedBVP(sg, lambda P: P[:, -1] ** (2 * sg), lambda x: np.full(len(x), -2 * sg))
    sys_ = assemble(bvp, mesh)
    U = solve_linear(sys_, tol=1e-12)
    exact = mesh.points()[:, -1] ** (2 * sg)
    rel = float(np.max(np.abs(U.values.ravel() - exact)) / np.max(exact))
    out.row(s, "t_power_sup_relerr", rel)
    out.check("reproduces_t_power", "Eq (eq:ex0)", rel, "< 1%", 0.01, rel < 0.01)

    res = flux_residual(sys_, U)
    scale = float(np.linalg.norm(sys_.rhs))
    flux = float(np.linalg.norm(res)) / scale
    out.row(s, "flux_residual_rel", flux)
    out.check("flux_conservation", "Eq (eq:ex0)", flux, "<= 10 x solver tol", 1e-11, flux <= 1e-11)

    bvp = MixedBVP(sg, lambda P: 1 + 0.5 * P[:, 0] + P[:, -1] ** 2,
                   lambda x: np.cos(np.pi * x[:, 0]))
    sys_ = assemble(bvp, mesh)
    U = solve_linear(sys_, tol=1e-12)
    e0 = energy_functional(sys_, U)
    losses = 0
    for _ in range(8):
        phi = np.zeros(mesh.size)
        phi[sys_.free] = rng.standard_normal(sys_.size) * 10.0 ** rng.uniform(-4, 0)
        comp = U.with_values(U.values.ravel() + phi)
        losses += energy_functional(sys_, comp) < e0 - 1e-12 * abs(e0)
    out.row(s, "dirichlet_principle_losses", losses)
    out.check("dirichlet_principle", "Eq (eq:ex0)", losses, "0 competitors below minimizer", 0,
              losses == 0)

    L = _default_set(s, "point(" + ",".join(["0"] * n) + ")")
    bvp = MixedBVP(sg, lambda P: 1 + 0.25 * np.sin(2 * P[:, 0]) + 0 * P[:, -1], None, L,
                   pin_excluded=10.0)
    U = solve_linear(assemble(bvp, mesh), tol=1e-10)
    h = 2.0 / (N - 1)
    margin = max_principle_margin(U, L, 4 * h, R=1.0)
    sup = float(U.values.max())
    out.row(s, "max_principle_margin", margin)
    out.check("maximum_principle", "Prop 2.5", margin / sup, ">= -1e-3 sup U", 1e-3,
              margin >= -1e-3 * sup)

    data = _bubble_extension_data(n, sg)
    crit = (n + 2 * sg) / (n - 2 * sg)
    flux_g = constants(n, sg).N_sigma * bubble_constant_exact(n, sg)
    qs, hs = [], []
    for lev in range(max(s.levels, 3)):
        Nl = (8 if n == 2 else 4) * 2 ** lev + 1
        if n == 3 and lev > 2:
            break
        m = HalfGrid.uniform([-1.0] * n, [1.0] * n, (Nl,) * n, 1.0, Nl, sg)
        bvp = MixedBVP(sg, data, lambda x: flux_g * bubble(x, (n, sg)) ** crit)
        W = solve_linear(assemble(bvp, m), tol=1e-10)
        qs.append(harnack_quotient(W, 1.0))
        hs.append(2.0 / (Nl - 1))
        out.row(s, "harnack_quotient", qs[-1], level=lev, detail=f"h={hs[-1]}", set_desc="bubble")
    out.plot("harnack_refinement", hs, qs)
    drift = max(abs(b / a - 1) for a, b in zip(qs[-3:], qs[-2:]))
    out.check("harnack_stable", "Prop 2.6", drift, "< 5% across two refinements", 0.05, drift < 0.05)
    return out


# ---------------------------------------------------------------- capacity


def _cover(L: SingularSet, rho: float):
    if isinstance(L, BallUnion):
        return [(c, r) for c, r in zip(L.centers, L.radii)]
    pts = L.sample(rho)
    return [(p, rho) for p in pts]


def exp_capacity(s: Settings, rng) -> Outcome:
    out = Outcome("capacity")
    n, sg = s.n, s.sigma
    L = _default_set(s, "ball(" + ",".join(["0"] * n) + ";0.25)")
    desc = L.describe()
    d = L.diameter()
    zero_expected = L.dim <= n - 2 * sg
    if zero_expected:
        h0 = 0.1 if n == 2 else 0.25
    else:
        h0 = d / 8 if n == 2 else d / 4
    growth = 1.15 if n == 2 else 1.25
    outer = 1.0 if d == 0 else max(2.0, 4 * d) if zero_expected else None

    mus, hs, caps = [], [], []
    for lev in range(s.levels):
        h = h0 / 2 ** lev
        mu = capm.mu_extension(L, outer, (n, sg), h, growth=growth)
        mus.append(mu.value)
        hs.append(h)
        rows = [mu]
        if not zero_expected:
            cap = capm.cap_fourier(L, h, (n, sg))
            caps.append(cap.value)
            rows.append(cap)
        for r in capm.capacity_rows(rows, (n, sg), desc):
            out.row(s, f"capacity_{r['method']}", float(r["value"]), level=lev,
                    detail=f"box[{r['box']}];mesh[{r['mesh']}]", set_desc=desc)
    out.plot("mu_refinement", hs, mus)
    if caps:
        out.plot("cap_refinement", hs, caps)

    rho = hs[-1] if zero_expected else d / 2
    bound = capm.covering_upper_bound(_cover(L, rho), (n, sg))
    out.row(s, "covering_upper_bound", bound, detail=f"rho={rho}", set_desc=desc)
    out.check("mu_below_covering_bound", "Thm 2.2", mus[-1] / bound, "<= 1.1", 0.1,
              mus[-1] <= 1.1 * bound)

    if zero_expected:
        slope = float(np.polyfit(np.log(hs), np.log(mus), 1)[0]) if len(hs) > 1 else float("nan")
        out.row(s, "mu_decay_exponent", slope, set_desc=desc)
        ok = len(mus) >= 2 and _monotone_down(mus) and slope > 0
        out.check("zero_capacity_trend", "Thm 2.2", slope, "decreasing, exponent > 0", 0, ok)
    else:
        # homogeneity: dilated balls at one fixed spacing
        radii = [0.1, 0.2, 0.4]
        hfix = 0.025 if n == 2 else 0.05
        growth_s = 1.15 if n == 2 else 1.25
        cv, mv = [], []
        for r in radii:
            B = BallUnion(np.zeros((1, n)), [r])
            cv.append(capm.cap_fourier(B, hfix, (n, sg)).value)
            mv.append(capm.mu_extension(B, None, (n, sg), hfix, growth=growth_s).value)
            out.row(s, "scaling_cap_fourier", cv[-1], detail=f"r={r};h={hfix}", set_desc=f"ball r={r}")
            out.row(s, "scaling_mu_extension", mv[-1], detail=f"r={r};h={hfix}", set_desc=f"ball r={r}")
        out.plot("cap_vs_radius", radii, cv)
        out.plot("mu_vs_radius", radii, mv)
        for name, vals in (("cap_fourier", cv), ("mu_extension", mv)):
            e = float(np.polyfit(np.log(radii), np.log(vals), 1)[0])
            rel = abs(e / (n - 2 * sg) - 1)
            out.row(s, f"scaling_exponent_{name}", e)
            out.check(f"scaling_exponent_{name}", "Eq (eq:capacity2)", rel, "within 5% of n-2sigma",
                      0.05, rel < 0.05)
    return out


def exp_equivalence(s: Settings, rng) -> Outcome:
    out = Outcome("equivalence")
    n, sg = s.n, s.sigma
    L = _default_set(s, "ball(" + ",".join(["0"] * n) + ";0.25)")
    log = []
    try:
        ratio = capm.equivalence_check(L, (n, sg), s.levels, log=log)
        converged = True
    except capm.UnconvergedError:
        converged = False
        ratio = log[-1]["ratio"]
    for r in log:
        out.row(s, "equivalence_ratio", r["ratio"], level=r["level"],
                detail=f"h={r['h']};mu={r['mu']!r};cap={r['cap']!r}", set_desc=L.describe())
    out.plot("equivalence_refinement", [r["h"] for r in log], [r["ratio"] for r in log])
    out.check("equivalence_ratio", "Prop 2.1", ratio, "in [0.85, 1.15]", 0.15,
              0.85 <= ratio <= 1.15 and converged)
    dist = [abs(r["ratio"] - 1) for r in log]
    trend = len(dist) >= 2 and _monotone_down(dist)
    out.check("equivalence_trend", "Prop 2.1", dist[-1], "|ratio-1| decreasing", 0, trend)
    return out


# ---------------------------------------------------------------- moving spheres


def exp_movesphere(s: Settings, rng) -> Outcome:
    out = Outcome("movesphere")
    n, sg = s.n, s.sigma
    L = 4.0
    lam = np.round(np.arange(0.05, 2.0001, 0.01), 10)
    lbars, hs = [], []
    base = 40 if n == 2 else 16
    for lev in range(s.levels):
        N = base * 2 ** lev + 1
        if N ** n > 4_000_000:
            break
        w = GridFn.from_function(lambda y: bubble(y, (n, sg)), [-L] * n, [L] * n, (N,) * n, sg)
        h = float(w.h[0])
        lb = moving_sphere_sweep(w, np.zeros(n), lam)
        lbars.append(lb)
        hs.append(h)
        out.row(s, "lambda_bar", lb, level=lev, detail=f"h={h}", set_desc="bubble")
    out.plot("lambda_bar_refinement", hs, lbars)
    errs = [abs(a - 1) for a in lbars]
    ok = all(e <= 2 * h for e, h in zip(errs, hs))
    out.check("bubble_lambda_bar", "Sec 3", errs[-1], "|lambda_bar - 1| <= 2h", 2 * hs[-1], ok)

    N = base + 1
    w = GridFn.from_function(lambda y: bubble(y, (n, sg)), [-L] * n, [L] * n, (N,) * n, sg)
    flag, wit = constancy_certificate(w, [np.zeros(n)], lam)
    out.notes["bubble_witness"] = None if wit is None else wit.to_dict()
    out.row(s, "bubble_certificate_constant", flag, set_desc="bubble")
    out.check("bubble_has_witness", "Eq (eq:aim1)", 0 if flag else 1, "witness with lambda > 1", 0,
              (not flag) and wit is not None and wit.lam > 1)
    flag1, _ = constancy_certificate(w, [np.zeros(n)], lam[lam <= 1.0])
    out.check("bubble_family_relative", "Eq (eq:aim1)", 1 if flag1 else 0, "no witness for lambda <= 1",
              0, flag1)
    c = w.with_values(np.full(w.shape, 2.0))
    centers = [np.zeros(n), np.full(n, 0.5), rng.uniform(-1, 1, n)]
    flagc, witc = constancy_certificate(c, centers, lam)
    out.row(s, "constant_certificate_constant", flagc, set_desc="constant")
    out.check("constant_no_witness", "Eq (eq:aim1)", 1 if flagc else 0, "no witness", 0,
              flagc and witc is None)
    return out


# ---------------------------------------------------------------- blow-up


def exp_blowup(s: Settings, rng) -> Outcome:
    out = Outcome("blowup")
    n, sg, k = s.n, s.sigma, s.k
    rate = (n - 2 * sg) / 2
    Lk = AffineStrip.coordinate(n, k)
    base = np.zeros(n)
    ray = np.eye(n)[k]
    radii = np.geomspace(0.5, 1e-3, 12)
    cyl = lambda x: cylindrical_solution(x, (n, sg), 1.0, k)
    slope, ok = blowup_exponent(cyl, Lk, base, radii, (n, sg), direction=ray)
    err = abs(slope + rate)
    out.row(s, "cylinder_slope", slope, set_desc=Lk.describe())
    out.check("cylinder_slope_exact", "Thm 1.3", err, "slope = -(n-2sigma)/2", 1e-10,
              err < 1e-10 and ok)
    pts = base + radii[:, None] * ray
    out.plot("slope_fit_cylinder", np.log(Lk.dist(pts)), np.log(cyl(pts)))

    sup = lambda x: Lk.dist(x) ** (-(n - 2 * sg))
    slope_s, ok_s = blowup_exponent(sup, Lk, base, radii, (n, sg), direction=ray)
    out.row(s, "supercritical_slope", slope_s, set_desc=Lk.describe())
    out.check("supercritical_rejected", "Thm 1.3", slope_s, "bound_ok false", 0, not ok_s)

    far = PointSet(np.full((1, n), 5.0))
    slope_b, ok_b = blowup_exponent(lambda x: bubble(x, (n, sg)), far, far.centers[0],
                                    np.geomspace(0.2, 1e-3, 8), (n, sg))
    out.row(s, "bubble_slope_regular_point", slope_b)
    out.check("bubble_regular", "Thm 1.3", slope_b, "bound_ok true", 0, ok_b)

    # semilinear solution singular at a point of the flat face
    Nm = 33 if n == 2 else 13
    mesh = HalfGrid.uniform([-1.0] * n, [1.0] * n, (Nm,) * n, 1.0, Nm, sg)
    h = 2.0 / (Nm - 1)
    A = cylinder_constant_exact(n, 0, sg) ** ((n - 2 * sg) / (4 * sg))
    P0 = PointSet(np.zeros((1, n)))
    data = lambda P: A * np.linalg.norm(P, axis=1) ** (-rate)
    U = solve_semilinear(MixedBVP(sg, data, "semilinear", P0, pin_excluded=A * (h / 2) ** (-rate)),
                         mesh)
    tr = GridFn(tuple([-1.0] * n), tuple([1.0] * n), U.trace(), sg)
    interp = tr.interpolator()
    radii_s = np.arange(1, (Nm - 1) // 4 + 1) * h
    slope_u, ok_u = blowup_exponent(interp, P0, np.zeros(n), radii_s[::-1], (n, sg))
    out.row(s, "semilinear_slope", slope_u, detail=f"iterations={U.info['iterations']}",
            set_desc=P0.describe())
    out.plot("slope_fit_semilinear", np.log(radii_s), np.log(interp(radii_s[:, None] * np.eye(n)[0])))
    out.check("semilinear_bound_ok", "Thm 1.3", slope_u, ">= -(n-2sigma)/2 - 0.1", 0.1, ok_u)
    return out


# ---------------------------------------------------------------- symmetry


def exp_symmetry(s: Settings, rng) -> Outcome:
    out = Outcome("symmetry")
    n, sg, k = s.n, s.sigma, s.k
    L = AffineStrip.coordinate(n, k)
    z = np.zeros(n)
    cyl = lambda x: cylindrical_solution(x, (n, sg), 1.0, k)
    ratio, bound, ok = symmetry_ratio(cyl, L, z, 0.01, (n, sg))
    out.row(s, "cylinder_ratio", ratio, set_desc=L.describe())
    out.check("cylinder_ratio_one", "Thm 1.2 (sym)", abs(ratio - 1), "ratio = 1", 1e-12,
              abs(ratio - 1) < 1e-12 and ok)
    tilt_dir = np.eye(n)[k]
    tilted = lambda x: cyl(x) * (1 + 0.1 * (x @ tilt_dir))
    rs = [0.02, 0.01, 0.005, 0.0025]
    excess, below = [], True
    for r in rs:
        ratio, bound, ok = symmetry_ratio(tilted, L, z, r, (n, sg))
        excess.append(ratio - 1)
        below &= ok
        out.row(s, "tilted_ratio", ratio, detail=f"r={r};bound={bound!r}", set_desc=L.describe())
    slope = float(np.polyfit(np.log(rs), np.log(excess), 1)[0])
    out.plot("tilted_excess_vs_r", rs, excess)
    out.row(s, "tilted_excess_slope", slope)
    out.check("tilted_linear_decay", "Thm 1.2 (sym)", slope, "slope = 1", 0.1, abs(slope - 1) < 0.1)
    out.check("tilted_below_bound", "Sec 5 bound", 0 if below else 1, "ratio <= 1.05 bound", 0, below)
    return out


# ---------------------------------------------------------------- poincare


def poincare_family(n):
    cut = lambda X: _chi(np.linalg.norm(X, axis=-1) / 0.9)
    x = lambda X: X[..., 0]
    t = lambda X: X[..., -1]
    polys = [
        x,
        lambda X: x(X) ** 2,
        lambda X: x(X) ** 3 - x(X),
        lambda X: x(X) * (1 + t(X)),
        lambda X: (x(X) + t(X)) ** 2,
        lambda X: x(X) + 2 * t(X) ** 2,
        lambda X: 1 + x(X) - 0.5 * x(X) ** 2 + t(X),
        lambda X: x(X) * (1 - t(X)) ** 2,
        lambda X: np.sum(X[..., :-1] ** 2, -1) - t(X),
        lambda X: (x(X) - 0.3) ** 3,
    ]
    return [lambda X, q=q: q(X) * cut(X) for q in polys]


def exp_poincare(s: Settings, rng) -> Outcome:
    out = Outcome("poincare")
    n, sg = min(s.n, 2), s.sigma
    N = 257 if n == 1 else 65
    mesh = HalfGrid.uniform([-1.0] * n, [1.0] * n, (N,) * n, 1.0, (N + 1) // 2, sg)
    r = 0.4
    F = mesh.sample(lambda X: X[..., 0])
    x1 = poincare_ratio(F, r, sg)
    ex = poincare_x1_exact(n, sg)
    out.row(s, "x1_ratio", x1, detail=f"exact={ex!r}")
    out.check("x1_closed_form", "Lemma 2.3", abs(x1 / ex - 1), "within 1%", 0.01,
              abs(x1 / ex - 1) < 0.01)
    ratios, dil = [], []
    for i, f in enumerate(poincare_family(n)):
        a = poincare_ratio(mesh.sample(f), r, sg)
        b = poincare_ratio(mesh.sample(lambda X, f=f: f(X / 2)), 2 * r, sg)
        ratios.append(a)
        dil.append(abs(b / a - 1))
        out.row(s, "family_ratio", a, level=i, detail=f"dilated={b!r}")
    out.plot("family_ratios", range(len(ratios)), ratios)
    out.row(s, "working_constant", max(ratios))
    finite = all(math.isfinite(v) and v >= 0 for v in ratios)
    out.check("family_finite", "Lemma 2.3", max(ratios), "finite", 0, finite)
    out.check("dilation_invariance", "Lemma 2.3", max(dil), "within 1%", 0.01, max(dil) < 0.01)
    t_ratio = poincare_ratio(mesh.sample(lambda X: X[..., -1] ** (2 * sg)), r, sg)
    out.check("t_power_zero", "Lemma 2.3", t_ratio, "= 0", 1e-12, abs(t_ratio) < 1e-12)
    return out


# ---------------------------------------------------------------- registry

EXPERIMENTS = {
    "constants": exp_constants,
    "fraclap-check": exp_fraclap,
    "extension-check": exp_extension,
    "solve": exp_solve,
    "capacity": exp_capacity,
    "equivalence": exp_equivalence,
    "movesphere": exp_movesphere,
    "blowup": exp_blowup,
    "symmetry": exp_symmetry,
    "poincare": exp_poincare,
}

DEFAULTS = {
    "constants": dict(n=2, sigma=0.5, k=0, levels=1),
    "fraclap-check": dict(n=2, sigma=0.5, k=0, levels=1),
    "extension-check": dict(n=2, sigma=0.5, k=0, levels=3),
    "solve": dict(n=2, sigma=0.5, k=0, levels=3),
    "capacity": dict(n=2, sigma=0.5, k=0, levels=3),
    "equivalence": dict(n=2, sigma=0.5, k=0, levels=3),
    "movesphere": dict(n=2, sigma=0.5, k=0, levels=3),
    "blowup": dict(n=2, sigma=0.5, k=0, levels=1),
    "symmetry": dict(n=3, sigma=0.5, k=1, levels=1),
    "poincare": dict(n=1, sigma=0.5, k=0, levels=1),
}


def run_experiment(s: Settings) -> Outcome:
    """Run one experiment with a generator seeded from ``(seed, experiment)``."""
    key = sorted(EXPERIMENTS).index(s.experiment)
    rng = np.random.default_rng([s.seed, key])
    t0 = time.perf_counter()
    out = EXPERIMENTS[s.experiment](s, rng)
    out.runtime = time.perf_counter() - t0
    return out
