"""Pointwise evaluation of the fractional Laplacian and the model solutions.

``frac_laplacian_point`` splits the hypersingular integral at ``inner_radius``:

* inside, the symmetrized second difference ``2u(x) - u(x+y) - u(x-y)`` is
  integrated in polar coordinates; after dividing by ``rho^2`` the radial
  factor is smooth and the weight ``rho^{1-2 sigma}`` is absorbed into a
  Gauss-Jacobi rule;
* between the radii, Gauss-Legendre panels on octaves;
* beyond ``outer_radius`` the ``u(x)`` part is closed exactly and the
  ``u(x+y)`` part with a power-decay model ``|y|^{-a}``
  (``a = tail_exponent_assumed``; ``None`` drops it, which is right for
  compactly supported or mean-zero oscillatory data).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import roots_jacobi, roots_legendre

from .core import FracParams, gamma, normalization_c, sphere_area

__all__ = [
    "QuadConfig",
    "NonIntegrableError",
    "SingularPointError",
    "sphere_rule",
    "frac_laplacian_point",
    "bubble",
    "bubble_constant",
    "bubble_constant_exact",
    "cylindrical_solution",
    "cylinder_constant",
    "cylinder_constant_exact",
]


class NonIntegrableError(ValueError):
    """The input violates the integrability needed by the tail closure."""


class SingularPointError(ValueError):
    pass


@dataclass(frozen=True)
class QuadConfig:
    inner_radius: float = 1.0
    outer_radius: float = 256.0
    nodes_inner: int = 48
    nodes_outer: int = 32
    tail_exponent_assumed: float | None = None
    n_angles: int = 32
    check_tail: bool = True

    def __post_init__(self):
        if not 0 < self.inner_radius < self.outer_radius:
            raise ValueError("need 0 < inner_radius < outer_radius")
        if min(self.nodes_inner, self.nodes_outer, self.n_angles) < 8:
            raise ValueError("node counts must be >= 8")

    def refined(self, factor: int = 2) -> "QuadConfig":
        return QuadConfig(
            self.inner_radius, self.outer_radius, self.nodes_inner * factor,
            self.nodes_outer * factor, self.tail_exponent_assumed,
            self.n_angles * factor, self.check_tail,
        )

    def with_tail(self, a: float | None) -> "QuadConfig":
        return QuadConfig(
            self.inner_radius, self.outer_radius, self.nodes_inner, self.nodes_outer,
            a, self.n_angles, self.check_tail,
        )


def _dims(p) -> tuple[int, float]:
    if isinstance(p, FracParams):
        return p.n, p.sigma
    n, sigma = p[0], p[1]
    return int(n), float(sigma)


@lru_cache(maxsize=64)
def sphere_rule(n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Directions and weights integrating over the unit sphere in R^n.

    n=1: the two points; n=2: ``m`` equal angles; n=3: Gauss-Legendre in
    ``cos(theta)`` times ``2m`` equal azimuths; n>=4: product Gauss rule in
    hyperspherical angles (rarely used).
    """
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        phi = 2 * np.pi * (np.arange(m) + 0.5) / m
        return np.stack([np.cos(phi), np.sin(phi)], -1), np.full(m, 2 * np.pi / m)
    if n == 3:
        z, wz = roots_legendre(m)
        phi = 2 * np.pi * (np.arange(2 * m) + 0.5) / (2 * m)
        Z, P = np.meshgrid(z, phi, indexing="ij")
        s = np.sqrt(1 - Z ** 2)
        dirs = np.stack([s * np.cos(P), s * np.sin(P), Z], -1).reshape(-1, 3)
        w = np.outer(wz, np.full(2 * m, np.pi / m)).ravel()
        return dirs, w
    # recursive: x = (cos a) e_n + (sin a) * S^{n-2}, density sin^{n-2} a
    sub_d, sub_w = sphere_rule(n - 1, max(8, m // 2))
    c, wc = roots_jacobi(m, (n - 3) / 2, (n - 3) / 2)
    s = np.sqrt(1 - c ** 2)
    dirs = np.concatenate([
        np.column_stack([si * sub_d, np.full(len(sub_d), ci)]) for ci, si in zip(c, s)
    ])
    w = np.concatenate([wci * sub_w for wci in wc])
    return dirs, w


def _default_angles(n: int, q: QuadConfig) -> int:
    return q.n_angles if n == 2 else max(8, q.n_angles // 2)


def _inner(u, x, n, sigma, R, nodes, dirs, wts):
    """0.5 * int_{|y|<R} (2u(x)-u(x+y)-u(x-y)) |y|^{-n-2 sigma} dy, excluding c_{n,sigma}."""
    z, wz = roots_jacobi(nodes, 0.0, 1.0 - 2.0 * sigma)
    rho = R * (1 + z) / 2
    w_rho = wz * (R / 2) ** (2 - 2 * sigma)
    pts_p = x + (rho[:, None, None] * dirs[None, :, :])
    pts_m = x - (rho[:, None, None] * dirs[None, :, :])
    ux = float(u(x[None, :])[0])
    up = u(pts_p.reshape(-1, n)).reshape(len(rho), len(dirs))
    um = u(pts_m.reshape(-1, n)).reshape(len(rho), len(dirs))
    g = ((2 * ux - up - um) @ wts) / rho ** 2
    return 0.5 * float(np.sum(w_rho * g)), ux


def _shells(R0, R1, nodes):
    """Gauss-Legendre nodes/weights on octave panels of [R0, R1]."""
    octs = max(1, int(math.ceil(math.log2(R1 / R0))))
    edges = R0 * (R1 / R0) ** (np.arange(octs + 1) / octs)
    z, wz = roots_legendre(nodes)
    rs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        rs.append(a + (b - a) * (z + 1) / 2)
        ws.append(wz * (b - a) / 2)
    return np.concatenate(rs), np.concatenate(ws)


def _shell_means(u, x, rho, dirs, wts):
    n = x.size
    pts = x + rho[:, None, None] * dirs[None, :, :]
    return u(pts.reshape(-1, n)).reshape(len(rho), len(dirs)) @ wts


def frac_laplacian_point(u, x, p, q: QuadConfig | None = None) -> float:
    """``(-Delta)^sigma u(x)``; ``u`` maps ``(m, n)`` arrays to ``(m,)``.

    ``p`` is a :class:`FracParams` or an ``(n, sigma)`` pair (``n = 1`` allowed).
    Without ``tail_exponent_assumed`` the far field beyond ``outer_radius`` is
    closed with the power decay observed on the last three shells, if any.
    Raises :class:`NonIntegrableError` when the shell contributions of ``|u|``
    beyond ``outer_radius`` stop decaying under radius doubling, or when the
    assumed tail exponent is not above ``-2 sigma``.
    """
    q = q or QuadConfig()
    n, sigma = _dims(p)
    x = np.asarray(x, dtype=float).ravel()
    a = q.tail_exponent_assumed
    if a is not None and a <= -2 * sigma:
        raise NonIntegrableError(f"tail exponent {a} <= -2 sigma: integral diverges")
    dirs, wts = sphere_rule(n, _default_angles(n, q))
    inner, ux = _inner(u, x, n, sigma, q.inner_radius, q.nodes_inner, dirs, wts)
    R0, R1 = q.inner_radius, q.outer_radius
    rho, w = _shells(R0, R1, q.nodes_outer)
    means = _shell_means(u, x, rho, dirs, wts)
    S = sphere_area(n)
    kern = rho ** (-1 - 2 * sigma)
    middle = float(np.sum(w * kern * (S * ux - means)))
    tail = ux * S * R1 ** (-2 * sigma) / (2 * sigma)
    probe = _shell_means(u, x, np.array([R1 / 4, R1 / 2, R1]), dirs, wts)
    far = float(probe[-1])
    if a is None:
        a = _observed_decay(*(float(v) for v in probe), sigma=sigma)
    if a is not None:
        tail -= far * R1 ** (-2 * sigma) / (a + 2 * sigma)
    if q.check_tail:
        _check_tail(u, x, n, sigma, R1, q.nodes_outer, dirs, wts)
    return normalization_c(n, sigma) * (inner + middle + tail)


def _observed_decay(m4, m2, m1, sigma):
    """Power decay of the shell means at ``R/4, R/2, R``, or ``None`` unless
    they are of one sign and follow one power law (oscillating far fields get
    no closure)."""
    m = np.array([m4, m2, m1])
    if np.any(m == 0.0) or not (np.all(m > 0) or np.all(m < 0)):
        return None
    a1, a2 = np.log(m[:2] / m[1:]) / math.log(2.0)
    if abs(a1 - a2) > 0.05 * max(1.0, abs(a2)) or a2 <= -sigma:
        return None
    return float(a2)


def _check_tail(u, x, n, sigma, R, nodes, dirs, wts):
    z, wz = roots_legendre(max(8, nodes // 2))
    shells = []
    for k in range(3):
        a, b = R * 2 ** k, R * 2 ** (k + 1)
        rho = a + (b - a) * (z + 1) / 2
        pts = x + rho[:, None, None] * dirs[None, :, :]
        vals = np.abs(u(pts.reshape(-1, n)).reshape(len(rho), len(dirs))) @ wts
        shells.append(float(np.sum(wz * (b - a) / 2 * vals * rho ** (-1 - 2 * sigma))))
    if shells[1] > 0 and shells[2] >= 0.95 * shells[1] and shells[1] >= 0.95 * shells[0]:
        raise NonIntegrableError(
            "far-field shell contributions do not decay under radius doubling"
        )


# ---------------------------------------------------------------- bubble


def bubble(y, p) -> np.ndarray | float:
    """``(1 + |y|^2)^{-(n - 2 sigma)/2}``; vectorized over leading axes."""
    n, sigma = _dims(p)
    y = np.asarray(y, dtype=float)
    r2 = np.sum(y * y, axis=-1)
    out = (1.0 + r2) ** (-(n - 2 * sigma) / 2)
    return float(out) if np.ndim(out) == 0 else out


def bubble_constant_exact(n: int, sigma: float) -> float:
    """Closed form ``2^{2 sigma} Gamma((n+2 sigma)/2) / Gamma((n-2 sigma)/2)``."""
    return 2 ** (2 * sigma) * gamma((n + 2 * sigma) / 2) / gamma((n - 2 * sigma) / 2)


@lru_cache(maxsize=None)
def _bubble_constant(n, sigma, q):
    u = lambda y: bubble(y, (n, sigma))
    return frac_laplacian_point(u, np.zeros(n), (n, sigma), q.with_tail(n - 2 * sigma))


def bubble_constant(p, q: QuadConfig | None = None) -> float:
    """Numerical ``c_b = (-Delta)^sigma w(0) / w(0)^{crit}`` (``w(0) = 1``)."""
    n, sigma = _dims(p)
    return _bubble_constant(n, sigma, q or QuadConfig())


# ---------------------------------------------------------------- cylinders


def _k(p, k):
    k = k if k is not None else getattr(p, "k", None)
    if k is None:
        raise ValueError("cylindrical profiles need the singular dimension k")
    return int(k)


def cylindrical_solution(x, p, A: float = 1.0, k: int | None = None):
    """``A |x''|^{-(n - 2 sigma)/2}`` with ``x = (x', x'')``, ``x' in R^k``."""
    n, sigma = _dims(p)
    k = _k(p, k)
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x[..., k:], axis=-1)
    if np.any(r == 0):
        raise SingularPointError("cylindrical profile is singular on R^k x {0}")
    out = A * r ** (-(n - 2 * sigma) / 2)
    return float(out) if np.ndim(out) == 0 else out


def cylinder_constant_exact(n: int, k: int, sigma: float) -> float:
    """Closed form of ``(-Delta)^sigma |x''|^{-p}`` at ``|x''| = 1``, ``p = (n-2 sigma)/2``.

    Reduces to the Riesz formula for ``|z|^{-p}`` in ``R^{n-k}``.
    """
    m, pe = n - k, (n - 2 * sigma) / 2
    b = (m - pe - 2 * sigma) / 2
    if b <= 0 and float(b).is_integer():
        return 0.0  # 1/Gamma vanishes at its poles
    return (
        2 ** (2 * sigma) * gamma((m - pe) / 2) * gamma((pe + 2 * sigma) / 2)
        / (gamma(b) * gamma(pe / 2))
    )


def _radial_outer(m, sigma, pe, cosphi, v0):
    """int over the ray at angle phi of (v0 - rho^{-pe}) |rho e - e1|^{-m-2s} rho^{m-1},
    excluding ``|rho e - e1| < 1/2``."""
    def kern(r):
        return (r * r - 2 * r * cosphi + 1) ** (-(m + 2 * sigma) / 2)

    pieces = []
    disc = cosphi * cosphi - 0.75
    if disc > 0 and cosphi > 0:
        lo, hi = cosphi - math.sqrt(disc), cosphi + math.sqrt(disc)
        pieces = [(0.0, lo), (hi, max(4.0, 2 * hi))]
        far = max(4.0, 2 * hi)
    else:
        pieces = [(0.0, 4.0)]
        far = 4.0
    total = 0.0
    opts = dict(epsabs=1e-13, epsrel=1e-11, limit=200)
    for a, b in pieces:
        if a == 0.0:
            # singular weight rho^{m-1-pe} at the origin
            f = lambda r: (v0 * r ** pe - 1.0) * kern(r)
            val, _ = integrate.quad(f, 0.0, b, weight="alg", wvar=(m - 1 - pe, 0.0), **opts)
        else:
            f = lambda r: (v0 - r ** (-pe)) * kern(r) * r ** (m - 1)
            val, _ = integrate.quad(f, a, b, **opts)
        total += val
    # [far, inf) in s = 1/rho: rho^{m-1} d rho = s^{-m-1} ds
    g = lambda s: (v0 - s ** pe) * (1 - 2 * s * cosphi + s * s) ** (-(m + 2 * sigma) / 2)
    val, _ = integrate.quad(g, 0.0, 1.0 / far, weight="alg", wvar=(2 * sigma - 1, 0.0), **opts)
    return total + val


def _reduced_angles(m, nang):
    """Values of cos(phi), phi the angle to e1, with weights integrating
    functions of phi over S^{m-1}.

    For m >= 2 the range is split at phi0 = pi/6, where rays stop meeting the
    excluded ball; on [0, phi0] the substitution phi = phi0 (1 - s^2) removes
    the square-root edge.
    """
    if m == 1:
        return np.array([1.0, -1.0]), np.array([1.0, 1.0])
    z, wz = roots_legendre(nang)
    s = (z + 1) / 2
    phi0 = np.pi / 6
    phi_a = phi0 * (1 - s * s)
    w_a = wz / 2 * 2 * phi0 * s
    phi_b = phi0 + (np.pi - phi0) * s
    w_b = wz / 2 * (np.pi - phi0)
    phi = np.concatenate([phi_a, phi_b])
    w = np.concatenate([w_a, w_b]) * np.sin(phi) ** (m - 2) * sphere_area(m - 1)
    return np.cos(phi), w


def cylinder_constant(p, q: QuadConfig | None = None, x0=None, k: int | None = None) -> float:
    """``(-Delta)^sigma u(x0) / |x0''|^{-(n + 2 sigma)/2}`` for ``u = |x''|^{-(n-2 sigma)/2}``.

    ``u`` depends only on the ``m = n - k`` normal coordinates, so the
    operator is evaluated in R^m (the ``R^k`` directions integrate out
    exactly).  The singular set is handled by polar coordinates centred on it,
    the symmetric zone ``|y| < |x0''|/2`` by the generic inner rule.
    """
    q = q or QuadConfig()
    n, sigma = _dims(p)
    k = _k(p, k)
    m, pe = n - k, (n - 2 * sigma) / 2
    if k > n - 2 * sigma or pe >= m:
        raise NonIntegrableError(
            f"k={k} exceeds n-2 sigma={n - 2 * sigma:g}: cylinder profile not admissible"
        )
    if x0 is None:
        x0 = np.zeros(n)
        x0[k] = 1.0
    x0 = np.asarray(x0, float)
    r0 = float(np.linalg.norm(x0[k:]))
    if r0 == 0:
        raise SingularPointError("reference point lies on the singular set")
    # work at |x''| = 1 along e1 of R^m; restore the scale at the end
    v = lambda z: np.linalg.norm(z, axis=-1) ** (-pe)
    e1 = np.zeros(m)
    e1[0] = 1.0
    dirs, wts = sphere_rule(m, _default_angles(m, q))
    inner, v0 = _inner(v, e1, m, sigma, 0.5, q.nodes_inner, dirs, wts)
    cs, ws = _reduced_angles(m, q.n_angles)
    outer = sum(w * _radial_outer(m, sigma, pe, c, v0) for c, w in zip(cs, ws))
    value = normalization_c(m, sigma) * (inner + outer)
    # homogeneity: (-Delta)^s u(x0) = value * r0^{-pe-2s}; normalized by r0^{-(n+2s)/2}
    return value * r0 ** (-pe - 2 * sigma) / r0 ** (-(n + 2 * sigma) / 2)
