"""Poisson-kernel extension of lattice data to the half-space, the weighted
Neumann trace, and the weighted-energy / Fourier-energy identity.

Normalization used throughout: the Fourier transform is unitary,
``f^(xi) = (2 pi)^{-n/2} int f(x) e^{-i x.xi} dx``.  For the Poisson extension
``F`` of ``f``::

    int_{R^{n+1}_+} t^{1-2s} |grad F|^2 = N(s) int |xi|^{2s} |f^|^2
    -lim t^{1-2s} d_t F(x, t)          = N(s) (-Delta)^s f(x)

so the weighted Neumann trace equals ``(-Delta)^s f`` exactly only at
``s = 1/2`` where ``N = 1``.

Lattice convolution
-------------------
For ``t`` comparable to or below the lattice spacing the kernel is too peaked
for a plain Riemann sum.  Around each target the second-order Taylor
polynomial of ``f`` (times a smooth radial cutoff ``psi`` of radius ``12h``) is
subtracted inside the sum and added back through the exact integrals
``A(t) = int P psi`` and ``B(t) = int P psi |z|^2``.  At ``t = 0`` this returns
``f`` exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import RegularGridInterpolator
from scipy.signal import fftconvolve

from .core import FracParams, constants, sphere_area
from .lattice import GridFn, HalfGrid, HalfGridFn, stretched_t, weighted_energy

__all__ = [
    "PoissonKernel",
    "FitConditioningError",
    "UnconvergedWarning",
    "extend",
    "extend_on_mesh",
    "extension_mesh",
    "fourier_energy",
    "energy_identity_check",
    "neumann_trace",
]


class FitConditioningError(ValueError):
    """The first t-layers cannot separate ``1``, ``t^{2 sigma}`` and ``t^2``."""


class UnconvergedWarning(RuntimeWarning):
    pass


CUTOFF_CELLS = 12.0


def _chi(s):
    """Smooth radial cutoff: 1 on [0, 1/2], 0 on [1, inf), C^inf in between."""
    s = np.asarray(s, dtype=float)
    u = np.clip(2.0 * s - 1.0, 0.0, 1.0)

    def bump(v):
        out = np.zeros_like(v)
        pos = v > 0
        out[pos] = np.exp(-1.0 / v[pos])
        return out

    a, b = bump(1.0 - u), bump(u)
    return a / (a + b)


@dataclass(frozen=True)
class PoissonKernel:
    n: int
    sigma: float

    @classmethod
    def of(cls, p) -> "PoissonKernel":
        if isinstance(p, FracParams):
            return cls(p.n, p.sigma)
        return cls(int(p[0]), float(p[1]))

    @property
    def beta(self) -> float:
        return constants(self.n, self.sigma).beta_poisson

    def __call__(self, z, t):
        """``beta t^{2s} (|z|^2 + t^2)^{-(n+2s)/2}``; ``z`` has shape ``(..., n)``."""
        z = np.asarray(z, float)
        r2 = np.sum(z * z, axis=-1)
        s = self.sigma
        return self.beta * t ** (2 * s) * (r2 + t * t) ** (-(self.n + 2 * s) / 2)

    @lru_cache(maxsize=4096)
    def moments(self, t: float, rc: float) -> tuple[float, float]:
        """``(int P(z,t) psi(z) dz, int P(z,t) psi(z) |z|^2 dz)`` with ``psi = chi(|z|/rc)``."""
        if t == 0.0:
            return 1.0, 0.0
        n, s = self.n, self.sigma
        a = (n + 2 * s) / 2
        c = self.beta * sphere_area(n)
        smax = rc / t
        f0 = lambda u: u ** (n - 1) * (1 + u * u) ** (-a) * float(_chi(u / smax))
        f2 = lambda u: u ** (n + 1) * (1 + u * u) ** (-a) * float(_chi(u / smax))
        opts = dict(limit=400, epsabs=1e-14, epsrel=1e-12)
        pts = [0.0, min(1.0, smax / 2), smax / 2, smax]
        pts = sorted(set(p for p in pts if p <= smax))
        A = sum(integrate.quad(f0, a_, b_, **opts)[0] for a_, b_ in zip(pts[:-1], pts[1:]))
        B = sum(integrate.quad(f2, a_, b_, **opts)[0] for a_, b_ in zip(pts[:-1], pts[1:]))
        return c * A, c * B * t * t


def _second_differences(f: GridFn) -> list[np.ndarray]:
    """Centered second differences per axis; zero on the boundary ring."""
    out = []
    v = f.values
    for k, hk in enumerate(f.h):
        d = np.zeros_like(v)
        core = [slice(1, -1) if j == k else slice(None) for j in range(f.n)]
        lo = [slice(0, -2) if j == k else slice(None) for j in range(f.n)]
        hi = [slice(2, None) if j == k else slice(None) for j in range(f.n)]
        d[tuple(core)] = (v[tuple(hi)] - 2 * v[tuple(core)] + v[tuple(lo)]) / hk ** 2
        out.append(d)
    return out


def _kernel(f: GridFn, pk: PoissonKernel, t: float, reach):
    """Lattice kernel ``P(dh, t) h^n`` for offsets ``|d_k| <= reach[k]`` (d = 0 zeroed)
    and the cutoff-weighted moment sums."""
    h = f.h
    axes = [np.arange(-r, r + 1) * hk for r, hk in zip(reach, h)]
    Z = np.stack(np.meshgrid(*axes, indexing="ij"), -1)
    K = pk(Z, t) * float(np.prod(h))
    center = tuple(reach)
    K[center] = 0.0
    rc = CUTOFF_CELLS * float(np.max(h))
    psi = _chi(np.linalg.norm(Z, axis=-1) / rc)
    S0 = float(np.sum(K * psi))
    S2 = [float(np.sum(K * psi * Z[..., k] ** 2)) for k in range(f.n)]
    return K, S0, S2, rc


RING_TOL = 1e-8


def _check_support(f: GridFn) -> GridFn:
    """Zero the boundary ring; refuse if it carries more than ``RING_TOL * max|f|``."""
    v = f.values.copy()
    ring = np.zeros(v.shape, bool)
    for k in range(f.n):
        sl = [slice(None)] * f.n
        sl[k] = 0
        ring[tuple(sl)] = True
        sl[k] = -1
        ring[tuple(sl)] = True
    scale = float(np.max(np.abs(v))) if v.size else 0.0
    if np.any(np.abs(v[ring]) > RING_TOL * scale):
        raise ValueError("f must vanish on the boundary ring of its box")
    v[ring] = 0.0
    return f.with_values(v)


def _kernel_for(f: GridFn, sigma):
    if sigma is None:
        sigma = f.sigma
    if sigma is None:
        raise ValueError("sigma unknown: pass it or set GridFn.sigma")
    return PoissonKernel(f.n, float(sigma))


def extend_on_mesh(f: GridFn, t_nodes, sigma=None, pad: int = 0) -> HalfGridFn:
    """Extension of ``f`` on the tensor mesh ``(lattice of f, padded by pad
    cells per side) x t_nodes``; one FFT convolution per layer."""
    f = _check_support(f)
    pk = _kernel_for(f, sigma)
    t_nodes = np.asarray(t_nodes, float)
    if np.any(t_nodes < 0):
        raise ValueError("targets need t >= 0")
    vals = np.pad(f.values, pad)
    lower = [a - pad * hk for a, hk in zip(f.lower, f.h)]
    upper = [b + pad * hk for b, hk in zip(f.upper, f.h)]
    g = GridFn(lower, upper, vals, pk.sigma)
    d2 = _second_differences(g)
    lap = sum(d2)
    reach = [s - 1 for s in g.shape]
    out = np.empty(g.shape + (len(t_nodes),))
    for j, t in enumerate(t_nodes):
        if t == 0.0:
            out[..., j] = vals
            continue
        K, S0, S2, rc = _kernel(g, pk, float(t), reach)
        A, B = pk.moments(float(t), rc)
        conv = fftconvolve(vals, K, mode="same")
        corr = -vals * S0 - 0.5 * sum(dk * s2 for dk, s2 in zip(d2, S2))
        out[..., j] = conv + corr + vals * A + lap * B / (2 * g.n)
    mesh = HalfGrid(tuple(g.axes()), t_nodes)
    return HalfGridFn(mesh, out)


def extend(f: GridFn, targets, sigma=None) -> np.ndarray:
    """Poisson extension of ``f`` at arbitrary points ``(m, n+1)`` with ``t >= 0``.

    Off-lattice Taylor data (value, gradient, Hessian) come from a cubic
    interpolant of ``f``; the correction follows the on-lattice scheme.
    """
    f = _check_support(f)
    pk = _kernel_for(f, sigma)
    X = np.atleast_2d(np.asarray(targets, float))
    if X.shape[1] != f.n + 1:
        raise ValueError("targets must have n+1 coordinates")
    if np.any(X[:, -1] < 0):
        raise ValueError("targets need t >= 0")
    n, h = f.n, f.h
    interp = RegularGridInterpolator(f.axes(), f.values, method="cubic",
                                     bounds_error=False, fill_value=0.0)
    allY = f.points()
    fv = f.flat
    nz = fv != 0
    Y, fv = allY[nz], fv[nz]
    dv = float(np.prod(h))
    rc = CUTOFF_CELLS * float(np.max(h))
    out = np.empty(len(X))
    eps = 0.5 * h
    for i, (x, t) in enumerate(zip(X[:, :n], X[:, -1])):
        f0 = float(interp(x[None, :])[0])
        if t == 0.0:
            out[i] = f0
            continue
        # Taylor data by differencing the interpolant
        E = np.diag(eps)
        fp = interp(x + E)
        fm = interp(x - E)
        grad = (fp - fm) / (2 * eps)
        hdiag = (fp - 2 * f0 + fm) / eps ** 2
        H = np.diag(hdiag)
        for a in range(n):
            for b in range(a + 1, n):
                pts = np.array([x + E[a] + E[b], x + E[a] - E[b], x - E[a] + E[b], x - E[a] - E[b]])
                v = interp(pts)
                H[a, b] = H[b, a] = (v[0] - v[1] - v[2] + v[3]) / (4 * eps[a] * eps[b])
        P = pk(Y - x, float(t)) * dv
        # Taylor correction over every lattice point inside the cutoff
        Zall = allY - x
        psi_all = _chi(np.linalg.norm(Zall, axis=-1) / rc)
        m = psi_all > 0
        Zn = Zall[m]
        Pn = pk(Zn, float(t)) * dv * psi_all[m]
        quad = 0.5 * np.einsum("ij,jk,ik->i", Zn, H, Zn)
        taylor_sum = float(np.sum(Pn * (f0 + Zn @ grad + quad)))
        A, B = pk.moments(float(t), rc)
        out[i] = float(np.sum(P * fv)) - taylor_sum + f0 * A + np.trace(H) * B / (2 * n)
    return out


def extension_mesh(f: GridFn, sigma: float, pad_factor: float = 1.0,
                   growth: float = 1.15, core: float | None = None, refine: int = 0):
    """Default ``(pad, t_nodes)`` for extending ``f``.

    Each side is padded by ``pad_factor`` box widths and ``T`` is the padded
    half-width.  Heights are graded with spacing ``~h`` on ``[0, core]``
    (default: a quarter of the box width) and grow geometrically above.
    ``refine`` halves the fine spacing and square-roots the growth that many
    times, leaving the x-lattice alone.
    """
    width = max(b - a for a, b in zip(f.lower, f.upper))
    h = float(np.min(f.h))
    pad = int(round(pad_factor * width / h))
    T = 0.5 * width * (1 + 2 * pad_factor)
    if core is None:
        core = 0.25 * width
    return pad, stretched_t(h / 2 ** refine, core, T, sigma, growth ** (0.5 ** refine))


def _dft_energy(f: GridFn, sigma: float, pad: int) -> float:
    shape = [pad * s for s in f.shape]
    F = np.fft.fftn(f.values, s=shape, axes=tuple(range(f.n)))
    h = f.h
    freqs = np.meshgrid(*[2 * np.pi * np.fft.fftfreq(s, d=hk) for s, hk in zip(shape, h)],
                        indexing="ij")
    xi2 = sum(q * q for q in freqs)
    dxi = np.prod([2 * np.pi / (s * hk) for s, hk in zip(shape, h)])
    scale = (np.prod(h) / (2 * np.pi) ** (f.n / 2)) ** 2
    return float(np.sum(xi2 ** sigma * np.abs(F) ** 2) * scale * dxi)


def fourier_energy(f: GridFn, sigma: float, pad: int | None = None) -> float:
    """``int |xi|^{2 sigma} |f^(xi)|^2 d xi`` from zero-padded DFTs of the lattice values.

    The kink of ``|xi|^{2 sigma}`` at the origin makes the frequency Riemann
    sum err like ``dxi^{n + 2 sigma}``; padding by ``pad`` and ``2 pad`` and
    extrapolating removes that term.
    """
    if pad is None:
        pad = 8 if f.n == 1 else 4
    e1 = _dft_energy(f, sigma, pad)
    e2 = _dft_energy(f, sigma, 2 * pad)
    r = 2.0 ** (f.n + 2 * sigma)
    return (r * e2 - e1) / (r - 1)


def energy_identity_check(f: GridFn, p, *, pad_factor: float = 1.0, growth: float = 1.15,
                          core: float | None = None, check_convergence: bool = True):
    """Return ``(lhs, rhs, relerr)``.

    ``lhs``: weighted Dirichlet energy of the lattice extension on the padded
    half-box; ``rhs``: ``N(sigma)`` times the Fourier energy.  With
    ``check_convergence`` the t-mesh is refined once and an
    :class:`UnconvergedWarning` issued if ``lhs`` moves by more than 2%.
    """
    n, sigma = (p.n, p.sigma) if isinstance(p, FracParams) else (int(p[0]), float(p[1]))
    pad, t = extension_mesh(f, sigma, pad_factor, growth, core)
    lhs = weighted_energy(extend_on_mesh(f, t, sigma, pad), sigma)
    rhs = constants(n, sigma).N_sigma * fourier_energy(f, sigma)
    if check_convergence:
        _, t2 = extension_mesh(f, sigma, pad_factor, growth, core, refine=1)
        lhs2 = weighted_energy(extend_on_mesh(f, t2, sigma, pad), sigma)
        if abs(lhs2 - lhs) > 0.02 * abs(lhs2):
            warnings.warn(
                f"weighted energy moved {abs(lhs2 - lhs) / abs(lhs2):.1%} under t-refinement",
                UnconvergedWarning,
            )
    return lhs, rhs, abs(lhs - rhs) / abs(rhs)


def neumann_trace(F: HalfGridFn, sigma: float) -> GridFn:
    """``-lim t^{1-2 sigma} d_t F`` per boundary node.

    Fits ``a + b t^{2 sigma} + c t^2`` through the first three layers
    (``a + b t^{2 sigma}`` through two when ``sigma > 0.85``, where ``t^2`` and
    ``t^{2 sigma}`` are too close to separate) and returns ``-2 sigma b``, so
    ``F = t^{2 sigma}`` gives ``-2 sigma`` exactly.
    """
    t = F.t_nodes
    two_terms = sigma > 0.85
    rows = t[: 2 if two_terms else 3]
    cols = [np.ones_like(rows), rows ** (2 * sigma)]
    if not two_terms:
        cols.append(rows ** 2)
    V = np.stack(cols, -1)
    # equilibrate columns: a tiny first layer is harmless, only near-dependence is not
    scale = np.max(np.abs(V), axis=0)
    cond = np.linalg.cond(V / scale)
    if not np.isfinite(cond) or cond > 1e10:
        raise FitConditioningError(f"layer fit condition number {cond:.3g}")
    data = F.values[..., : V.shape[0]]
    coef = np.linalg.solve(V / scale, data.reshape(-1, V.shape[0]).T) / scale[:, None]
    b = coef[1].reshape(F.values.shape[:-1])
    return F.mesh.base().with_values(-2 * sigma * b)
