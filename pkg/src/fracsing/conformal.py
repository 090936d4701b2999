"""Kelvin transforms about boundary spheres, the discrete moving-sphere sweep
and a sampled constancy certificate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import GridFn, SingularSet, is_empty

__all__ = [
    "KelvinMap",
    "KelvinSingularError",
    "Witness",
    "kelvin",
    "sweep_tolerance",
    "first_violation",
    "moving_sphere_sweep",
    "constancy_certificate",
]


class KelvinSingularError(ValueError):
    pass


@dataclass(frozen=True)
class KelvinMap:
    """Inversion in the sphere of radius ``lam`` about ``(center, 0)``.

    ``center`` lives in ``R^n``; targets in ``R^{n+1}`` are handled by
    appending ``t = 0`` to the center, so the center is always on the flat
    boundary and the half-space is preserved.
    """

    center: tuple
    lam: float
    exponent: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.ravel(self.center)))
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    def _center_for(self, d: int) -> np.ndarray:
        c = np.asarray(self.center)
        if d == c.size:
            return c
        if d == c.size + 1:
            return np.append(c, 0.0)
        raise ValueError(f"target dimension {d} does not match center dimension {c.size}")

    def reflect(self, pts) -> tuple[np.ndarray, np.ndarray]:
        """Image points and the factor ``(lam / |xi - X|)^exponent``."""
        pts = np.atleast_2d(np.asarray(pts, float))
        c = self._center_for(pts.shape[1])
        d = pts - c
        r2 = np.einsum("ij,ij->i", d, d)
        if np.any(r2 == 0.0):
            raise KelvinSingularError("Kelvin transform evaluated at its center")
        image = c + (self.lam ** 2 / r2)[:, None] * d
        factor = (self.lam / np.sqrt(r2)) ** self.exponent
        return image, factor

    def transform(self, u):
        """The transformed field as a callable on ``(m, d)`` arrays."""
        return lambda pts: kelvin(u, self, pts)


def kelvin(u, m: KelvinMap, target):
    """``(lam/|xi - X|)^e u(X + lam^2 (xi - X)/|xi - X|^2)``.

    ``u`` maps ``(m, d)`` arrays to ``(m,)``; a single target returns a float.
    """
    single = np.ndim(target) == 1
    image, factor = m.reflect(target)
    out = factor * np.asarray(u(image), float).reshape(-1)
    return float(out[0]) if single else out


@dataclass(frozen=True)
class Witness:
    x: tuple
    lam: float
    y: tuple
    kelvin_value: float
    value: float

    def to_dict(self) -> dict:
        return {"x": list(self.x), "lambda": self.lam, "y": list(self.y),
                "kelvin": self.kelvin_value, "w": self.value}


def sweep_tolerance(w: GridFn) -> float:
    """``1e-6`` plus the interpolation allowance ``2 h Lip(w)``."""
    return 1e-6 + 2.0 * float(np.max(w.h)) * w.lipschitz()


def _admissible(w: GridFn, L: SingularSet | None):
    pts = w.points()
    keep = np.ones(len(pts), bool)
    if not is_empty(L):
        keep &= L.dist(pts) >= 2.0 * float(np.max(w.h))
    return pts, keep


def first_violation(w: GridFn, x, lam: float, exponent: float, L=None, tol=None,
                    interp=None, _nodes=None) -> Witness | None:
    """The worst node ``y`` with ``w_{x,lam}(y) > w(y)(1 + tol)``, or ``None``."""
    if tol is None:
        tol = sweep_tolerance(w)
    if interp is None:
        interp = w.interpolator()
    pts, keep = _nodes if _nodes is not None else _admissible(w, L)
    x = np.asarray(x, float)
    r = np.linalg.norm(pts - x, axis=1)
    sel = keep & (r >= lam) & (r > 0)
    if not sel.any():
        return None
    y = pts[sel]
    m = KelvinMap(x, lam, exponent)
    image, factor = m.reflect(y)
    ok = np.ones(len(y), bool)
    if not is_empty(L):
        ok = L.dist(image) >= 2.0 * float(np.max(w.h))
    kv = factor * interp(image)
    wy = w.flat[sel]
    excess = np.where(ok, kv - wy * (1 + tol), -np.inf)
    i = int(np.argmax(excess))
    if excess[i] <= 0:
        return None
    return Witness(tuple(x.tolist()), float(lam), tuple(y[i].tolist()), float(kv[i]), float(wy[i]))


def moving_sphere_sweep(w: GridFn, x, lambda_grid, L: SingularSet | None = None,
                        exponent: float | None = None, tol: float | None = None) -> float:
    """Largest ``lam`` of ``lambda_grid`` such that every ``lam' <= lam`` passes.

    ``exponent`` defaults to ``n - 2 sigma`` from ``w.sigma``.
    """
    lambdas = np.asarray(lambda_grid, float)
    if np.any(np.diff(lambdas) <= 0):
        raise ValueError("lambda_grid must be increasing")
    if exponent is None:
        if w.sigma is None:
            raise ValueError("exponent needed when the field carries no sigma")
        exponent = w.n - 2.0 * w.sigma
    if tol is None:
        tol = sweep_tolerance(w)
    interp = w.interpolator()
    nodes = _admissible(w, L)
    best = 0.0
    for lam in lambdas:
        if first_violation(w, x, lam, exponent, L, tol, interp, nodes) is not None:
            break
        best = float(lam)
    return best


def constancy_certificate(w: GridFn, centers, lambda_grid, L: SingularSet | None = None,
                          exponent: float | None = None, tol: float | None = None):
    """``(True, None)`` if no sampled sphere is violated, else ``(False, witness)``.

    A grid can refute constancy but never prove it; the flag only says the
    sampled family ``(centers x lambda_grid)`` shows no violation.
    """
    if exponent is None:
        exponent = w.n - 2.0 * w.sigma
    if tol is None:
        tol = sweep_tolerance(w)
    interp = w.interpolator()
    nodes = _admissible(w, L)
    for x in centers:
        for lam in lambda_grid:
            wit = first_violation(w, x, float(lam), exponent, L, tol, interp, nodes)
            if wit is not None:
                return False, wit
    return True, None
