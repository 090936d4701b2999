"""Fractional capacity by two independent estimators, their equivalence
constant, covering upper bounds and Hausdorff premeasures.

``cap_fourier``
    ``inf int |xi|^{2 sigma} |f^|^2`` over ``f >= 1`` on ``Lambda``.  ``f`` is
    the multilinear (Q1) interpolant of lattice values on a box, zero on the
    box boundary, so the energy is that of a genuine ``H^sigma`` function.  Its
    symbol is summed over aliases (``|m_k| <= 4``) with the Q1 factor
    ``prod sinc^4``; the quadratic form is applied with zero-padded FFTs.  The
    obstacle problem is solved by projected conjugate gradients.  Box
    truncation error decays like ``L^{-(n - 2 sigma)}`` and is removed by a
    two-box extrapolation.

``mu_extension``
    Energy ``int |t|^{1-2 sigma} |grad G|^2`` over ``R^{n+1}`` of the discrete
    capacitary potential: ``G = 1`` on Lambda-nodes of ``t = 0``, ``G = 0`` on
    the outer boundary, zero flux elsewhere on ``t = 0``; twice the half-space
    energy by even reflection.  Meshes are fine near Lambda and geometrically
    stretched outward.

In the continuum ``mu = 2 N(sigma) Cap``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .core import FracParams, constants, sphere_area
from .lattice import (
    is_empty,
    HalfGrid,
    SingularSet,
    weighted_energy,
)
from .solver import MixedBVP, assemble, solve_linear

__all__ = [
    "CapacityEstimate",
    "UnconvergedError",
    "fourier_box",
    "cap_fourier",
    "mu_extension",
    "equivalence_check",
    "tent_energy",
    "tent_energy_exact",
    "covering_upper_bound",
    "hausdorff_premeasure",
    "capacity_rows",
]


class UnconvergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class CapacityEstimate:
    value: float
    method: str
    mesh: dict
    box: dict
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in ("fourier", "extension", "covering"):
            raise ValueError(f"unknown method {self.method}")
        if not self.value >= 0:
            raise ValueError("capacity estimates are nonnegative")


def _dims(p):
    if isinstance(p, FracParams):
        return p.n, p.sigma
    return int(p[0]), float(p[1])


# ---------------------------------------------------------------- Fourier route


def _q1_symbol(P: int, h: float, sigma: float, n: int, aliases: int = 4) -> np.ndarray:
    k0 = 2 * np.pi * np.fft.fftfreq(P, d=h)
    grids = np.meshgrid(*([k0] * n), indexing="ij")
    K = np.zeros((P,) * n)
    for m in itertools.product(range(-aliases, aliases + 1), repeat=n):
        s2 = np.zeros_like(K)
        w = np.ones_like(K)
        for a in range(n):
            xi = grids[a] + 2 * np.pi * m[a] / h
            s2 += xi * xi
            w *= np.sinc(xi * h / (2 * np.pi)) ** 4
        K += s2 ** sigma * w
    return K


class _FourierForm:
    """``f -> A f`` with ``f^T A f = int |xi|^{2 sigma} |(Q1 f)^|^2``."""

    def __init__(self, N: int, n: int, h: float, sigma: float, pad: int = 2):
        self.N, self.n, self.P = N, n, pad * N
        self.K = _q1_symbol(self.P, h, sigma, n)
        dxi = 2 * np.pi / (self.P * h)
        self.scale = (h ** n / (2 * np.pi) ** (n / 2)) ** 2 * dxi ** n * self.P ** n
        self.sl = tuple(slice(0, N) for _ in range(n))

    def __call__(self, f: np.ndarray) -> np.ndarray:
        F = np.zeros((self.P,) * self.n)
        F[self.sl] = f.reshape((self.N,) * self.n)
        G = np.fft.ifftn(self.K * np.fft.fftn(F)).real
        return (G[self.sl] * self.scale).ravel()


def fourier_box(L: SingularSet, h: float, half_width: float | None = None):
    """Cube lattice centred on the bounding box of ``L``: ``(center, half_width, N)``."""
    lo, hi = L.bbox()
    center = (lo + hi) / 2
    if half_width is None:
        half_width = max(2.0 * L.diameter(), 8 * h)
    m = int(math.ceil(half_width / h))
    return center, m * h, 2 * m + 1


def _projected_cg(apply, x, lower, fixed, tol=1e-8, maxiter=5000):
    """Minimize ``x^T A x`` subject to ``x >= 1`` on ``lower``, ``x`` frozen on ``fixed``.

    Conjugate gradients (Fletcher-Reeves) on the currently free set; a step
    that would cross the bound is cut at the bound and CG restarts with the
    enlarged active set.  Converged when a full CG pass decreases the energy
    by less than ``tol`` relative and the multipliers on the active set are
    nonnegative.
    """
    Ax = apply(x)
    E = float(x @ Ax)
    history = [E]
    its = 0
    movable = ~fixed
    while its < maxiter:
        g = 2 * Ax
        active = lower & (x <= 1 + 1e-12) & (g >= 0)
        work = movable & ~active
        r = np.where(work, -g, 0.0)
        rr = float(r @ r)
        if rr == 0.0:
            break
        d = r.copy()
        E_start = E
        hit = False
        while its < maxiter:
            its += 1
            Ad = apply(d)
            dAd = float(d @ Ad)
            if dAd <= 0:
                break
            alpha = float(r @ d) / (2 * dAd)
            dec = lower & work & (d < 0)
            if dec.any():
                amax = float(np.min((x[dec] - 1.0) / (-d[dec])))
                if amax < alpha:
                    alpha, hit = max(amax, 0.0), True
            x = x + alpha * d
            Ax = Ax + alpha * Ad
            if hit:
                x[dec & (x <= 1 + 1e-12)] = 1.0
                Ax = apply(x)
            E_new = float(x @ Ax)
            history.append(E_new)
            small = abs(E - E_new) <= tol * 1e-2 * abs(E_new)
            E = E_new
            if hit:
                break
            r_new = np.where(work, -2 * Ax, 0.0)
            rr_new = float(r_new @ r_new)
            d = r_new + (rr_new / rr) * d
            r, rr = r_new, rr_new
            if small:
                break
        if not hit and abs(E_start - E) <= tol * abs(E):
            g = 2 * Ax
            if not np.any(lower & (x <= 1 + 1e-12) & (g < -1e-10 * np.abs(g).max())):
                return x, E, history, its
    raise UnconvergedError(f"projected CG stopped after {its} iterations")


def _cap_fourier_box(L, n, sigma, h, center, half_width, N, tol, pad=2):
    axes = [c + (np.arange(N) - (N - 1) / 2) * h for c in center]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, n)
    d = L.dist(pts)
    lam = d <= h * math.sqrt(n) / 2 * (1 + 1e-9)
    ring = np.zeros((N,) * n, bool)
    for k in range(n):
        sl = [slice(None)] * n
        sl[k] = 0
        ring[tuple(sl)] = True
        sl[k] = -1
        ring[tuple(sl)] = True
    ring = ring.ravel()
    if np.any(lam & ring):
        raise ValueError("Lambda must lie inside the Fourier box")
    form = _FourierForm(N, n, h, sigma, pad)
    x = np.where(lam, 1.0, 0.0)
    x, E, hist, its = _projected_cg(form, x, lam, ring, tol)
    return E, its, int(lam.sum())


def cap_fourier(L: SingularSet, grid, p, half_width: float | None = None,
                tol: float = 1e-8, extrapolate: bool = True) -> CapacityEstimate:
    """Fourier capacity of ``L``.

    ``grid`` is a spacing, a ``GridFn`` whose spacing and box are reused, or
    ``None`` (``diam / 16``).

    With ``extrapolate`` the box is doubled and ``E_inf = (2^q E(2B) - E(B)) / (2^q - 1)``,
    ``q = n - 2 sigma``, is reported; ``extra`` holds both raw energies.
    """
    n, sigma = _dims(p)
    h = grid
    if grid is not None and not np.isscalar(grid):
        h = float(np.min(grid.h))
        if half_width is None:
            half_width = 0.5 * float(np.min(np.subtract(grid.upper, grid.lower)))
    if is_empty(L):
        return CapacityEstimate(0.0, "fourier", {"h": h}, {"half_width": half_width})
    if h is None:
        h = max(L.diameter(), 1e-3) / 16
    center, B, N = fourier_box(L, h, half_width)
    E1, its1, nl = _cap_fourier_box(L, n, sigma, h, center, B, N, tol)
    extra = {"energy_box": E1, "iterations": its1, "lambda_nodes": nl}
    value = E1
    if extrapolate:
        E2, its2, _ = _cap_fourier_box(L, n, sigma, h, center, 2 * B, 2 * N - 1, tol)
        q = 2.0 ** (n - 2 * sigma)
        value = (q * E2 - E1) / (q - 1)
        extra.update(energy_box2=E2, iterations2=its2, truncation=E1 - value)
        value = max(value, 0.0)
    return CapacityEstimate(float(value), "fourier", {"h": h, "N": N},
                            {"center": center.tolist(), "half_width": B}, extra)


# ---------------------------------------------------------------- extension route


def extension_mesh_for(L: SingularSet, n: int, sigma: float, h: float,
                       outer: float | None = None, growth: float = 1.15) -> HalfGrid:
    lo, hi = L.bbox()
    center = (lo + hi) / 2
    core = (hi - lo) / 2 + 2 * h
    if outer is None:
        outer = 20 * max(L.diameter(), 4 * h)
    return HalfGrid.stretched(n, h, core, outer, outer, sigma, growth, center,
                              t_core=max(float(core.max()), 2 * h))


def mu_extension(L: SingularSet, halfbox, p, h: float | None = None,
                 growth: float = 1.15, return_potential: bool = False):
    """Weighted capacity ``mu_sigma(L, Omega)``.

    ``halfbox`` is a prepared :class:`HalfGrid`, or the half-width of
    ``Omega`` (``None``: twenty diameters) for a stretched mesh of core
    spacing ``h``.
    """
    n, sigma = _dims(p)
    mesh, outer = (halfbox, None) if isinstance(halfbox, HalfGrid) else (None, halfbox)
    if is_empty(L):
        est = CapacityEstimate(0.0, "extension", {"h": h}, {"outer": outer})
        return (est, None) if return_potential else est
    if mesh is None:
        if h is None:
            h = max(L.diameter(), 1e-3) / 16
        mesh = extension_mesh_for(L, n, sigma, h, outer, growth)
    bvp = MixedBVP(sigma, 0.0, None, L, pin_excluded=1.0)
    G = solve_linear(assemble(bvp, mesh), tol=1e-10)
    E = 2.0 * weighted_energy(G, sigma)
    est = CapacityEstimate(
        float(E), "extension",
        {"h": float(np.min(mesh.h)), "nodes": mesh.size, "growth": growth},
        {"outer": float(max(abs(mesh.x_axes[0][0]), abs(mesh.x_axes[0][-1]))), "T": mesh.T},
        {"iterations": G.info.get("iterations"), "gmin": float(G.values.min()),
         "gmax": float(G.values.max())},
    )
    return (est, G) if return_potential else est


def equivalence_check(L: SingularSet, p, levels: int = 3, h0: float | None = None,
                      log: list | None = None) -> float:
    """``mu_extension / (2 N(sigma) cap_fourier)`` at the finest of ``levels``
    halvings of ``h0`` (default ``diam / 8``).

    Every level is appended to ``log`` as a dict; an :class:`UnconvergedError`
    is raised if either estimator still moves by more than 5% at the last
    refinement.
    """
    n, sigma = _dims(p)
    N = constants(n, sigma).N_sigma
    if h0 is None:
        h0 = L.diameter() / 8
    rows = []
    for lev in range(levels):
        h = h0 / 2 ** lev
        mu = mu_extension(L, None, (n, sigma), h)
        cap = cap_fourier(L, h, (n, sigma))
        rows.append({"level": lev, "h": h, "mu": mu.value, "cap": cap.value,
                     "ratio": mu.value / (2 * N * cap.value)})
    if log is not None:
        log.extend(rows)
    if levels >= 2:
        a, b = rows[-2], rows[-1]
        for key in ("mu", "cap"):
            if abs(b[key] - a[key]) > 0.05 * abs(b[key]):
                raise UnconvergedError(f"{key} moved more than 5% at the last refinement")
    return rows[-1]["ratio"]


# ---------------------------------------------------------------- coverings


def tent_energy_exact(n: int, sigma: float) -> float:
    """Closed form of :func:`tent_energy`."""
    a = n + 2 - 2 * sigma
    ang = 2 * math.pi ** (n / 2) * math.gamma(1 - sigma) / math.gamma(a / 2)
    return ang * (2 ** a - 1) / a


def tent_energy(n: int, sigma: float) -> float:
    """``int_{R^{n+1}} |t|^{1-2 sigma} |grad f|^2`` for the tent ``f = clip(2 - |X|, 0, 1)``.

    ``|grad f| = 1`` on ``1 < |X| < 2``; the integral is a radial one times the
    spherical moment ``int_{S^n} |w_t|^{1-2 sigma}``, both by quadrature.
    """
    radial, _ = integrate.quad(lambda r: r ** (n + 1 - 2 * sigma), 1.0, 2.0)
    # spherical moment via the polar angle: |S^{n-1}| int_0^pi |cos a|^{1-2s} sin^{n-1} a da
    moment, _ = integrate.quad(
        lambda a: abs(math.cos(a)) ** (1 - 2 * sigma) * math.sin(a) ** (n - 1),
        0.0, math.pi, points=[math.pi / 2], limit=200,
    )
    return radial * sphere_area(n) * moment


def covering_upper_bound(balls, p) -> float:
    """``sum_i E_tent r_i^{n - 2 sigma}`` over ``(center, radius)`` pairs."""
    n, sigma = _dims(p)
    E = tent_energy(n, sigma)
    total = 0.0
    for _, r in balls:
        if r <= 0:
            raise ValueError("radii must be positive")
        total += E * r ** (n - 2 * sigma)
    return total


def hausdorff_premeasure(L: SingularSet, s: float, delta: float) -> float:
    """Upper estimate of the ``s``-premeasure at scale ``delta``.

    Cubes of the dyadic level with diameter ``<= delta`` that contain a
    sample of ``L`` form the cover; each contributes its circumradius to
    the power ``s``.  The lattice is offset by an irrational shift so
    axis-aligned sets do not sit on cube faces.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if is_empty(L):
        return 0.0
    n = L.n
    if not 0 < s <= n:
        raise ValueError("s must lie in (0, n]")
    j = math.ceil(math.log2(math.sqrt(n) / delta))
    side = 2.0 ** (-j)
    rho = side * math.sqrt(n) / 2
    pts = L.sample(side / 4)
    shift = side * (math.sqrt(2) - 1) / 3
    keys = np.unique(np.floor((pts + shift) / side).astype(np.int64), axis=0)
    return float(len(keys) * rho ** s)


def capacity_rows(estimates, p, set_desc: str) -> list[dict]:
    """Flat CSV rows: method, n, sigma, set, box, mesh, value."""
    n, sigma = _dims(p)
    rows = []
    for e in estimates:
        rows.append({
            "method": e.method, "n": n, "sigma": sigma, "set": set_desc,
            "box": ";".join(f"{k}={v}" for k, v in sorted(e.box.items())),
            "mesh": ";".join(f"{k}={v}" for k, v in sorted(e.mesh.items())),
            "value": repr(float(e.value)),
        })
    return rows
