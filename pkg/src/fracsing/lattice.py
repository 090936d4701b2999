"""Sampled fields on R^n and on the weighted half-space R^{n+1}_+, and the
geometric singular sets they are measured against.

Conventions
-----------
* ``GridFn`` stores ``values`` as an n-d array in C (row-major) order; the
  flat row-major view is ``values.ravel()``.
* A ``HalfGrid`` is a tensor mesh ``x_axes[0] x ... x x_axes[n-1] x t_nodes``
  with the t index fastest.  x axes are uniform for meshes built with
  :meth:`HalfGrid.uniform`; :meth:`HalfGrid.stretched` grows the spacing
  geometrically away from a fine core (used for capacities).
* The discrete weighted Dirichlet form is the finite-volume one: t-edges carry
  the exact two-point conductance ``1 / int t^{2 sigma - 1} dt`` (exact on
  ``{1, t^{2 sigma}}``), x-edges carry the dual-cell weight integral
  ``int t^{1 - 2 sigma} dt``.  :func:`weighted_energy` and the solver matrix
  are the same quadratic form.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from functools import cached_property, reduce
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

__all__ = [
    "GridFn",
    "HalfGrid",
    "HalfGridFn",
    "SingularSet",
    "PointSet",
    "BallUnion",
    "AffineStrip",
    "EmptySet",
    "SetUnion",
    "graded_t",
    "stretched_axis",
    "dual_volumes",
    "t_weights",
    "weighted_energy",
    "trace",
    "dist_to_set",
    "is_empty",
    "parse_set",
    "MAX_HALF_UNKNOWNS",
]

MAX_HALF_UNKNOWNS = 2_000_000


# ---------------------------------------------------------------- GridFn


@dataclass(frozen=True, eq=False)
class GridFn:
    """Samples of a scalar field on a uniform box lattice in R^n."""

    lower: tuple
    upper: tuple
    values: np.ndarray
    sigma: float | None = None

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1 and len(lo) > 1:
            raise ValueError("flat values need an explicit shape; use GridFn.from_flat")
        if vals.ndim != len(lo) or len(lo) != len(hi):
            raise ValueError("box corners and values disagree on dimension")
        if any(s < 2 for s in vals.shape):
            raise ValueError("every axis needs at least 2 samples")
        if any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("upper corner must exceed lower corner on every axis")
        vals.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_flat(cls, lower, upper, shape, flat, sigma=None):
        flat = np.asarray(flat, dtype=float)
        if flat.size != int(np.prod(shape)):
            raise ValueError("values length must equal the product of shape")
        return cls(lower, upper, flat.reshape(tuple(shape)), sigma)

    @classmethod
    def from_function(cls, f, lower, upper, shape, sigma=None):
        g = cls(lower, upper, np.zeros(tuple(shape)), sigma)
        return g.with_values(f(g.points()).reshape(g.shape))

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def h(self) -> np.ndarray:
        return np.array(
            [(b - a) / (s - 1) for a, b, s in zip(self.lower, self.upper, self.shape)]
        )

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, s) for a, b, s in zip(self.lower, self.upper, self.shape)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def points(self) -> np.ndarray:
        return np.stack([m.ravel() for m in self.mesh()], axis=-1)

    def with_values(self, values) -> "GridFn":
        return GridFn(self.lower, self.upper, np.reshape(values, self.shape), self.sigma)

    def interpolator(self, method: str = "linear"):
        """Callable ``(m, n) -> (m,)``; zero outside the box."""
        rgi = RegularGridInterpolator(
            self.axes(), self.values, method=method, bounds_error=False, fill_value=0.0
        )
        return lambda pts: rgi(np.atleast_2d(pts))

    def lipschitz(self) -> float:
        """Largest one-sided difference quotient on the lattice."""
        out = 0.0
        for k, hk in enumerate(self.h):
            out = max(out, float(np.max(np.abs(np.diff(self.values, axis=k)))) / hk)
        return out

    # -- serialization ---------------------------------------------------

    def _header(self) -> dict:
        return {
            "format": "fracsing-gridfn-v1",
            "lower": list(self.lower),
            "upper": list(self.upper),
            "shape": list(self.shape),
            "sigma": self.sigma,
        }

    def to_csv(self, path) -> None:
        """CSV with ``#``-prefixed JSON header, then ``i0,..,i{n-1},value`` rows."""
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            fh.write("# " + json.dumps(self._header()) + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"i{k}" for k in range(self.n)] + ["value"])
            for idx in np.ndindex(*self.shape):
                w.writerow(list(idx) + [repr(float(self.values[idx]))])

    @classmethod
    def from_csv(cls, path) -> "GridFn":
        with Path(path).open(encoding="utf-8") as fh:
            head = json.loads(fh.readline()[1:])
            rows = list(csv.reader(fh))[1:]
        vals = np.zeros(head["shape"])
        for row in rows:
            vals[tuple(int(v) for v in row[:-1])] = float(row[-1])
        return cls(head["lower"], head["upper"], vals, head["sigma"])

    def to_binary(self, path) -> None:
        """One JSON header line, then little-endian float64 values in row-major order."""
        with Path(path).open("wb") as fh:
            fh.write((json.dumps(self._header()) + "\n").encode())
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def from_binary(cls, path) -> "GridFn":
        raw = Path(path).read_bytes()
        cut = raw.index(b"\n")
        head = json.loads(raw[:cut])
        vals = np.frombuffer(raw[cut + 1 :], dtype="<f8").reshape(head["shape"])
        return cls(head["lower"], head["upper"], vals.copy(), head["sigma"])


# ---------------------------------------------------------------- half-space meshes


def min_grading(sigma: float) -> float:
    return 1.0 / (2.0 - 2.0 * sigma)


def default_grading(sigma: float) -> float:
    return max(1.0, 1.5 / (2.0 - 2.0 * sigma))


def graded_t(T: float, M: int, sigma: float, gamma: float | None = None) -> np.ndarray:
    """Heights ``T (j/M)^gamma``; ``gamma`` below ``1/(2-2 sigma)`` is rejected."""
    if gamma is None:
        gamma = default_grading(sigma)
    if gamma < min_grading(sigma) - 1e-12:
        raise ValueError(
            f"grading exponent {gamma} too small for sigma={sigma}; "
            f"need >= {min_grading(sigma):.4g}"
        )
    if M < 2:
        raise ValueError("need at least 2 t-layers")
    return T * (np.arange(M + 1) / M) ** gamma


def stretched_axis(h: float, core: float, L: float, growth: float = 1.15,
                   center: float = 0.0) -> np.ndarray:
    """Nodes symmetric about ``center``: spacing ``h`` on ``|x| <= core``, then
    geometric growth until ``|x| = L``."""
    pts = [0.0]
    x = 0.0
    while x < core - 1e-12 * max(1.0, core):
        x += h
        pts.append(x)
    step = h
    while x < L - 1e-12 * L:
        step *= growth
        nxt = x + step
        if L - nxt < 0.5 * step * growth:
            nxt = L
        x = nxt
        pts.append(x)
    p = np.array(pts)
    return center + np.concatenate([-p[:0:-1], p])


def stretched_t(h: float, core: float, T: float, sigma: float, growth: float = 1.15) -> np.ndarray:
    """Graded layers on ``[0, core]`` (about ``core/h`` of them), geometric above."""
    M0 = max(2, int(math.ceil(core / h)))
    lower = graded_t(core, M0, sigma)
    pts = list(lower)
    x = core
    step = lower[-1] - lower[-2]
    while x < T - 1e-12 * T:
        step *= growth
        nxt = x + step
        if T - nxt < 0.5 * step * growth:
            nxt = T
        x = nxt
        pts.append(x)
    return np.array(pts)


def dual_volumes(x: np.ndarray) -> np.ndarray:
    """Trapezoid (dual-cell) lengths of a 1-D node set."""
    d = np.diff(x)
    v = np.zeros(len(x))
    v[:-1] += d / 2
    v[1:] += d / 2
    return v


def t_weights(t: np.ndarray, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(omega, kappa)``.

    ``omega[j] = int t^{1-2 sigma}`` over the dual cell of layer ``j``;
    ``kappa[j] = 1 / int_{t_j}^{t_{j+1}} s^{2 sigma - 1} ds`` is the exact
    conductance of the edge ``(j, j+1)``.
    """
    a = 2.0 - 2.0 * sigma
    mid = np.concatenate([[0.0], 0.5 * (t[1:] + t[:-1]), [t[-1]]])
    omega = (mid[1:] ** a - mid[:-1] ** a) / a
    kappa = 2.0 * sigma / np.diff(t ** (2.0 * sigma))
    return omega, kappa


@dataclass(frozen=True, eq=False)
class HalfGrid:
    """Tensor mesh of ``box x [0, T]`` with the t index fastest."""

    x_axes: tuple
    t_nodes: np.ndarray

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.x_axes)
        t = np.asarray(self.t_nodes, dtype=float)
        for a in axes:
            if len(a) < 2 or np.any(np.diff(a) <= 0):
                raise ValueError("x axes must be strictly increasing with >= 2 nodes")
        if len(t) < 3 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("t_nodes must start at 0 and increase strictly")
        for a in axes + (t,):
            a.setflags(write=False)
        object.__setattr__(self, "x_axes", axes)
        object.__setattr__(self, "t_nodes", t)
        if len(axes) > 3:
            raise ValueError("half-space meshes are limited to n <= 3")
        if self.size > MAX_HALF_UNKNOWNS:
            raise ValueError(
                f"half-space mesh with {self.size} nodes exceeds the desk cap "
                f"{MAX_HALF_UNKNOWNS}"
            )

    @classmethod
    def uniform(cls, lower, upper, shape, T, M, sigma, gamma=None) -> "HalfGrid":
        axes = [np.linspace(a, b, s) for a, b, s in zip(lower, upper, shape)]
        return cls(tuple(axes), graded_t(T, M, sigma, gamma))

    @classmethod
    def stretched(cls, n, h, core, L, T, sigma, growth=1.15, center=None,
                  t_core=None) -> "HalfGrid":
        """Spacing ``h`` on ``|x_k - center_k| <= core_k`` (scalar or per axis)
        and on ``t <= t_core`` (default: smallest core, at least ``2h``),
        geometric growth out to ``L`` and ``T``."""
        center = np.zeros(n) if center is None else np.asarray(center, float)
        cores = np.broadcast_to(np.asarray(core, float), (n,))
        if t_core is None:
            t_core = max(float(cores.min()), 2 * h)
        axes = [stretched_axis(h, ck, L, growth, c) for ck, c in zip(cores, center)]
        return cls(tuple(axes), stretched_t(h, t_core, T, sigma, growth))

    @property
    def n(self) -> int:
        return len(self.x_axes)

    @property
    def x_shape(self) -> tuple:
        return tuple(len(a) for a in self.x_axes)

    @property
    def shape(self) -> tuple:
        return self.x_shape + (len(self.t_nodes),)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def T(self) -> float:
        return float(self.t_nodes[-1])

    @cached_property
    def is_uniform(self) -> bool:
        return all(np.allclose(np.diff(a), a[1] - a[0], rtol=1e-10, atol=0) for a in self.x_axes)

    @property
    def h(self) -> np.ndarray:
        return np.array([np.min(np.diff(a)) for a in self.x_axes])

    def base(self) -> GridFn:
        """Uniform x-lattice metadata as a zero ``GridFn``."""
        if not self.is_uniform:
            raise ValueError("stretched meshes have no uniform base lattice")
        return GridFn([a[0] for a in self.x_axes], [a[-1] for a in self.x_axes],
                      np.zeros(self.x_shape))

    def x_points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.x_axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.x_axes, self.t_nodes, indexing="ij")

    def points(self) -> np.ndarray:
        return np.stack([m.ravel() for m in self.mesh()], axis=-1)

    def boundary_mask(self) -> np.ndarray:
        """Top (``t = T``) and lateral faces: the Dirichlet part of a half-box."""
        mask = np.zeros(self.shape, bool)
        mask[..., -1] = True
        for k in range(self.n):
            sl = [slice(None)] * (self.n + 1)
            sl[k] = 0
            mask[tuple(sl)] = True
            sl[k] = -1
            mask[tuple(sl)] = True
        return mask

    def flat_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, bool)
        mask[..., 0] = True
        return mask

    def cell_volumes(self) -> np.ndarray:
        """Unweighted dual-cell volumes, shape ``self.shape``."""
        vols = [dual_volumes(a) for a in self.x_axes] + [dual_volumes(self.t_nodes)]
        return reduce(np.multiply.outer, vols)

    def x_volumes(self) -> np.ndarray:
        return reduce(np.multiply.outer, [dual_volumes(a) for a in self.x_axes])

    def sample(self, f, sigma=None) -> "HalfGridFn":
        """Evaluate ``f((m, n+1) points)`` on every node."""
        return HalfGridFn(self, np.asarray(f(self.points()), float).reshape(self.shape))


@dataclass(frozen=True, eq=False)
class HalfGridFn:
    mesh: HalfGrid
    values: np.ndarray
    info: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(self.mesh.shape)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def t_nodes(self) -> np.ndarray:
        return self.mesh.t_nodes

    @property
    def base(self) -> GridFn:
        return self.mesh.base()

    def with_values(self, values) -> "HalfGridFn":
        return HalfGridFn(self.mesh, values)

    def trace(self) -> np.ndarray:
        return self.values[..., 0]


# ---------------------------------------------------------------- energy & trace


def energy_terms(mesh: HalfGrid, sigma: float):
    """Per-axis edge coefficients of the discrete weighted Dirichlet form.

    Returns a list of ``n + 1`` arrays; entry ``k`` has the shape of the
    edge set along axis ``k`` and multiplies ``(difference along k)^2``.
    """
    omega, kappa = t_weights(mesh.t_nodes, sigma)
    xv = [dual_volumes(a) for a in mesh.x_axes]
    out = []
    for k, a in enumerate(mesh.x_axes):
        factors = [xv[l] if l != k else 1.0 / np.diff(a) for l in range(mesh.n)]
        out.append(reduce(np.multiply.outer, factors + [omega]))
    out.append(reduce(np.multiply.outer, xv + [kappa]))
    return out


def weighted_energy(F: HalfGridFn, sigma: float) -> float:
    """Discrete ``int t^{1-2 sigma} |grad F|^2`` over the half-box.

    Nonnegative, invariant under adding constants, exact for functions of
    ``t`` alone in ``span{1, t^{2 sigma}}``.
    """
    U = F.values
    total = 0.0
    for k, coef in enumerate(energy_terms(F.mesh, sigma)):
        total += float(np.sum(coef * np.diff(U, axis=k) ** 2))
    return total


def trace(F: HalfGridFn) -> GridFn:
    """The ``t = 0`` slice as a ``GridFn`` (uniform meshes only)."""
    return F.mesh.base().with_values(F.values[..., 0])


# ---------------------------------------------------------------- singular sets


class SingularSet:
    """Closed set in R^n queried through its Euclidean distance function."""

    kind = "abstract"

    def dist(self, x) -> np.ndarray:
        raise NotImplementedError

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def dim(self) -> float:
        raise NotImplementedError

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        return self.dist(x) <= tol

    def __add__(self, other: "SingularSet") -> "SingularSet":
        return SetUnion((self, other))

    def translate(self, v) -> "SingularSet":
        raise NotImplementedError

    def sample(self, spacing: float) -> np.ndarray:
        """Points of the set, no point of it farther than ~``spacing`` from a sample."""
        raise NotImplementedError

    def diameter(self) -> float:
        """Bounding-box diagonal; subclasses with a closed form override it."""
        lo, hi = self.bbox()
        return float(np.linalg.norm(hi - lo))

    def describe(self) -> str:
        raise NotImplementedError

    @property
    def n(self) -> int:
        raise NotImplementedError


def _as_points(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class PointSet(SingularSet):
    centers: np.ndarray
    kind = "point-set"

    def __post_init__(self):
        object.__setattr__(self, "centers", _as_points(self.centers))

    @property
    def n(self):
        return self.centers.shape[1]

    @property
    def dim(self):
        return 0.0

    def dist(self, x):
        x = _as_points(x)
        d = np.linalg.norm(x[:, None, :] - self.centers[None, :, :], axis=-1)
        return d.min(axis=1)

    def bbox(self):
        return self.centers.min(axis=0), self.centers.max(axis=0)

    def translate(self, v):
        return PointSet(self.centers + np.asarray(v, float))

    def sample(self, spacing):
        return self.centers.copy()

    def diameter(self):
        c = self.centers
        return float(np.max(np.linalg.norm(c[:, None] - c[None], axis=-1)))

    def describe(self):
        return "+".join("point(" + ",".join(f"{c:g}" for c in p) + ")" for p in self.centers)


@dataclass(frozen=True, eq=False)
class BallUnion(SingularSet):
    centers: np.ndarray
    radii: np.ndarray
    kind = "ball-union"

    def __post_init__(self):
        c = _as_points(self.centers)
        r = np.atleast_1d(np.asarray(self.radii, dtype=float))
        if r.shape != (c.shape[0],) or np.any(r < 0):
            raise ValueError("one nonnegative radius per center")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", r)

    @property
    def n(self):
        return self.centers.shape[1]

    @property
    def dim(self):
        return float(self.n)

    def dist(self, x):
        x = _as_points(x)
        d = np.linalg.norm(x[:, None, :] - self.centers[None, :, :], axis=-1) - self.radii
        return np.maximum(d.min(axis=1), 0.0)

    def bbox(self):
        r = self.radii[:, None]
        return (self.centers - r).min(axis=0), (self.centers + r).max(axis=0)

    def translate(self, v):
        return BallUnion(self.centers + np.asarray(v, float), self.radii)

    def sample(self, spacing):
        out = []
        for c, r in zip(self.centers, self.radii):
            m = int(np.ceil(r / spacing))
            g = np.stack(np.meshgrid(*[np.linspace(-r, r, 2 * m + 1)] * self.n,
                                     indexing="ij"), -1).reshape(-1, self.n)
            out.append(c + g[np.linalg.norm(g, axis=-1) <= r * (1 + 1e-12)])
        return np.concatenate(out)

    def diameter(self):
        c, r = self.centers, np.asarray(self.radii)
        d = np.linalg.norm(c[:, None] - c[None], axis=-1) + r[:, None] + r[None]
        return float(d.max())

    def describe(self):
        return "+".join(
            "ball(" + ",".join(f"{c:g}" for c in p) + f";{r:g})"
            for p, r in zip(self.centers, self.radii)
        )


@dataclass(frozen=True, eq=False)
class AffineStrip(SingularSet):
    """``origin + span(basis)``, optionally cut to ``|coefficient_i| <= extent``.

    With ``extent=None`` this is a full affine k-plane.
    """

    origin: np.ndarray
    basis: np.ndarray
    extent: float | None = None
    kind = "affine-strip"

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=float).ravel()
        B = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if B.shape[1] != o.size:
            raise ValueError("basis vectors must live in the same R^n as origin")
        q, _ = np.linalg.qr(B.T)
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "basis", q.T[: B.shape[0]])

    @classmethod
    def coordinate(cls, n: int, k: int, extent: float | None = None, origin=None):
        """``R^k x {0}`` spanned by the first ``k`` coordinate axes."""
        o = np.zeros(n) if origin is None else np.asarray(origin, float)
        return cls(o, np.eye(n)[:k], extent)

    @property
    def n(self):
        return self.origin.size

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self):
        return float(self.k)

    def project(self, x) -> np.ndarray:
        """Coefficients of the nearest point, clipped to the extent."""
        c = (_as_points(x) - self.origin) @ self.basis.T
        if self.extent is not None:
            c = np.clip(c, -self.extent, self.extent)
        return c

    def dist(self, x):
        x = _as_points(x)
        c = self.project(x)
        return np.linalg.norm(x - self.origin - c @ self.basis, axis=-1)

    def bbox(self):
        if self.extent is None:
            raise ValueError("unbounded strip has no bounding box")
        corners = np.abs(self.basis).sum(axis=0) * self.extent
        return self.origin - corners, self.origin + corners

    def translate(self, v):
        return AffineStrip(self.origin + np.asarray(v, float), self.basis, self.extent)

    def sample(self, spacing):
        if self.extent is None:
            raise ValueError("unbounded strip cannot be sampled")
        if self.k == 0:
            return self.origin[None, :].copy()
        m = int(np.ceil(self.extent / spacing))
        c = np.stack(np.meshgrid(*[np.linspace(-self.extent, self.extent, 2 * m + 1)] * self.k,
                                 indexing="ij"), -1).reshape(-1, self.k)
        return self.origin + c @ self.basis

    def diameter(self):
        if self.k == 0:
            return 0.0
        if self.extent is None:
            return math.inf
        return 2.0 * float(self.extent) * math.sqrt(self.k)

    def describe(self):
        ext = "inf" if self.extent is None else f"{self.extent:g}"
        return f"strip({self.k};{ext})"


@dataclass(frozen=True, eq=False)
class EmptySet(SingularSet):
    ndim: int = 2
    kind = "empty"

    @property
    def n(self):
        return self.ndim

    @property
    def dim(self):
        return -math.inf

    def dist(self, x):
        return np.full(_as_points(x).shape[0], np.inf)

    def bbox(self):
        raise ValueError("empty set has no bounding box")

    def translate(self, v):
        return self

    def sample(self, spacing):
        return np.zeros((0, self.ndim))

    def diameter(self):
        return 0.0

    def describe(self):
        return "empty"


@dataclass(frozen=True, eq=False)
class SetUnion(SingularSet):
    parts: tuple
    kind = "union"

    def __post_init__(self):
        flat = []
        for p in self.parts:
            flat.extend(p.parts if isinstance(p, SetUnion) else [p])
        object.__setattr__(self, "parts", tuple(flat))

    @property
    def n(self):
        return self.parts[0].n

    @property
    def dim(self):
        return max(p.dim for p in self.parts)

    def dist(self, x):
        return np.min([p.dist(x) for p in self.parts], axis=0)

    def bbox(self):
        boxes = [p.bbox() for p in self.parts if not isinstance(p, EmptySet)]
        return (np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0))

    def translate(self, v):
        return SetUnion(tuple(p.translate(v) for p in self.parts))

    def sample(self, spacing):
        return np.concatenate([p.sample(spacing) for p in self.parts])

    def describe(self):
        return "+".join(p.describe() for p in self.parts)


def is_empty(L) -> bool:
    return L is None or L.dim == -math.inf


def dist_to_set(x, L: SingularSet):
    """Euclidean distance from one point (float) or many points (array) to ``L``."""
    x = np.asarray(x, dtype=float)
    d = L.dist(x)
    return float(d[0]) if x.ndim == 1 else d


_TOKEN = re.compile(r"^\s*(point|ball|strip)\s*\((.*)\)\s*$")


def parse_set(spec: str, n: int) -> SingularSet:
    """Parse ``point(x1,..)``, ``ball(c1,..;r)``, ``strip(k;extent)`` joined by ``+``.

    ``strip(k;extent)`` is ``[-extent, extent]^k x {0}`` in the first ``k``
    coordinates; ``extent`` may be ``inf``.  ``empty`` gives the empty set.
    """
    spec = spec.strip()
    if spec in ("", "empty"):
        return EmptySet(n)
    parts = []
    depth = 0
    buf = ""
    for ch in spec:
        depth += (ch == "(") - (ch == ")")
        if ch == "+" and depth == 0:
            parts.append(buf)
            buf = ""
        else:
            buf += ch
    parts.append(buf)
    sets = []
    for item in parts:
        m = _TOKEN.match(item)
        if not m:
            raise ValueError(f"cannot parse set component {item!r}")
        name, body = m.groups()
        if name == "point":
            c = [float(v) for v in body.split(",")]
            if len(c) != n:
                raise ValueError(f"point needs {n} coordinates")
            sets.append(PointSet([c]))
        elif name == "ball":
            cs, r = body.split(";")
            c = [float(v) for v in cs.split(",")]
            if len(c) != n:
                raise ValueError(f"ball center needs {n} coordinates")
            sets.append(BallUnion([c], [float(r)]))
        else:
            ks, ext = body.split(";")
            k = int(ks)
            if not 0 <= k <= n - 1:
                raise ValueError("strip dimension must satisfy 0 <= k <= n-1")
            e = float(ext)
            sets.append(AffineStrip.coordinate(n, k, None if math.isinf(e) else e))
    return sets[0] if len(sets) == 1 else SetUnion(tuple(sets))
