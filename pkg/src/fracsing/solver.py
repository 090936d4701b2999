"""Finite-volume solver for ``div(t^{1-2 sigma} grad U) = 0`` on a half-box.

Boundary conditions: Dirichlet on the top and lateral faces, a prescribed
weighted Neumann flux ``g = -lim t^{1-2 sigma} d_t U`` on ``t = 0`` (or the
critical semilinear flux ``U^{(n+2 sigma)/(n-2 sigma)}``), and an excluded set
``Lambda`` on the flat face where either nothing is imposed (the Neumann source
is dropped) or the value is pinned (capacitary potentials).

The matrix is the Hessian of :func:`fracsing.lattice.weighted_energy`, so
``U^T A U`` equals the discrete weighted energy and the weak form reads
``A U = V_x g`` on flat nodes, ``V_x`` the dual-cell x-volume.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, spsolve

from .lattice import HalfGrid, HalfGridFn, SingularSet, energy_terms, is_empty, min_grading

__all__ = [
    "MixedBVP",
    "SparseSystem",
    "SolverError",
    "DivergenceError",
    "assemble",
    "system_matrix",
    "solve_linear",
    "solve",
    "solve_semilinear",
    "energy_functional",
    "flux_residual",
    "lambda_nodes",
    "harnack_quotient",
    "max_principle_margin",
    "half_ball_mask",
]

AMG_THRESHOLD = 2_000
DIRECT_LIMIT = 200_000


class SolverError(RuntimeError):
    def __init__(self, msg, history=None):
        super().__init__(msg)
        self.history = list(history or [])


class DivergenceError(SolverError):
    pass


@dataclass(frozen=True)
class MixedBVP:
    """``dirichlet(points (m, n+1)) -> (m,)``; ``neumann(x (m, n)) -> (m,)``,
    ``None`` (zero flux) or ``"semilinear"``."""

    sigma: float
    dirichlet: Callable | float = 0.0
    neumann: Callable | str | None = None
    excluded: SingularSet | None = None
    pin_excluded: float | None = None
    initial: Callable | None = None

    def __post_init__(self):
        if not 0 < self.sigma < 1:
            raise ValueError("sigma out of (0,1)")
        if isinstance(self.neumann, str) and self.neumann != "semilinear":
            raise ValueError("neumann must be callable, None or 'semilinear'")

    @property
    def semilinear(self) -> bool:
        return isinstance(self.neumann, str)

    def dirichlet_values(self, pts) -> np.ndarray:
        if callable(self.dirichlet):
            out = np.asarray(self.dirichlet(pts), float)
        else:
            out = np.full(len(pts), float(self.dirichlet))
        if not np.all(np.isfinite(out)):
            raise ValueError("Dirichlet data must be finite")
        return out


@dataclass(frozen=True, eq=False)
class SparseSystem:
    """Reduced system ``A_ff u_f = b_f`` plus what is needed to rebuild the field."""

    A: sp.csr_matrix          # full matrix (all nodes)
    A_ff: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray          # flat indices of unknowns
    fixed_values: np.ndarray  # full-length vector, valid on fixed nodes
    neumann_load: np.ndarray  # full-length b (zero off the flat face)
    mesh: HalfGrid
    sigma: float

    @property
    def size(self) -> int:
        return len(self.free)

    def full(self, u_free) -> np.ndarray:
        u = self.fixed_values.copy()
        u[self.free] = u_free
        return u

    def permuted(self, perm) -> "SparseSystem":
        """Same problem with unknowns listed in the order ``free[perm]``."""
        perm = np.asarray(perm)
        return SparseSystem(self.A, self.A_ff[perm][:, perm].tocsr(), self.rhs[perm],
                            self.free[perm], self.fixed_values, self.neumann_load,
                            self.mesh, self.sigma)


def _diff_operator(shape, k):
    """Sparse forward difference along axis ``k`` of a C-ordered array."""
    mats = []
    for j, s in enumerate(shape):
        if j == k:
            mats.append(sp.diags([-np.ones(s - 1), np.ones(s - 1)], [0, 1], shape=(s - 1, s)))
        else:
            mats.append(sp.identity(s))
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(out, m)
    return out.tocsr()


def system_matrix(mesh: HalfGrid, sigma: float) -> sp.csr_matrix:
    """``sum_k D_k^T diag(c_k) D_k``: the Hessian of the discrete weighted energy."""
    A = None
    for k, coef in enumerate(energy_terms(mesh, sigma)):
        D = _diff_operator(mesh.shape, k)
        term = D.T @ sp.diags(coef.ravel()) @ D
        A = term if A is None else A + term
    return A.tocsr()


def lambda_nodes(mesh: HalfGrid, L: SingularSet | None, tube: float | None = None) -> np.ndarray:
    """Flat-face nodes (x-shape mask) within ``tube`` of ``Lambda``.

    ``tube`` defaults to a round-off tolerance; if no node qualifies the
    nearest ones are taken so a lower-dimensional set is never lost.
    """
    xs = mesh.x_shape
    if is_empty(L):
        return np.zeros(xs, bool)
    d = L.dist(mesh.x_points()).reshape(xs)
    tol = 1e-9 * float(np.min(mesh.h)) if tube is None else tube
    mask = d <= tol
    if not mask.any():
        mask = d <= d.min() * (1 + 1e-9)
    return mask


def assemble(bvp: MixedBVP, mesh: HalfGrid) -> SparseSystem:
    t = mesh.t_nodes
    # graded layers t_j ~ (j/M)^gamma have t_1/t_2 = 2^{-gamma}; gamma below
    # 1/(2 - 2 sigma) leaves the weight unresolved at t = 0
    if t[1] / t[2] > 2.0 ** (-min_grading(bvp.sigma)) * (1 + 1e-9):
        raise ValueError("mesh too coarse: first t-layer fails the grading invariant")
    A = system_matrix(mesh, bvp.sigma)
    shape = mesh.shape
    fixed = mesh.boundary_mask()
    vals = np.zeros(shape)
    pts = mesh.points().reshape(shape + (mesh.n + 1,))
    vals[fixed] = bvp.dirichlet_values(pts[fixed])
    lam = lambda_nodes(mesh, bvp.excluded)
    if bvp.pin_excluded is not None:
        flat_fixed = fixed[..., 0] | lam
        fixed[..., 0] = flat_fixed
        vals[..., 0][lam & ~mesh.boundary_mask()[..., 0]] = bvp.pin_excluded
    load = np.zeros(shape)
    if callable(bvp.neumann):
        g = np.asarray(bvp.neumann(mesh.x_points()), float).reshape(mesh.x_shape)
        g = np.where(lam, 0.0, g)
        load[..., 0] = mesh.x_volumes() * g
    flat_fixed = fixed.ravel()
    free = np.flatnonzero(~flat_fixed)
    fv = vals.ravel()
    A_ff = A[free][:, free].tocsr()
    A_fd = A[free][:, np.flatnonzero(flat_fixed)]
    rhs = load.ravel()[free] - A_fd @ fv[flat_fixed]
    return SparseSystem(A, A_ff, rhs, free, fv, load.ravel(), mesh, bvp.sigma)


def _preconditioner(A):
    if A.shape[0] >= AMG_THRESHOLD:
        import pyamg

        # 'local' weighting avoids pyamg's randomly started spectral-radius estimate,
        # which would make results differ between runs in the last bits
        ml = pyamg.smoothed_aggregation_solver(A.tocsr(), symmetry="symmetric",
                                               smooth=("jacobi", {"weighting": "local"}))
        return ml.aspreconditioner(cycle="V"), "amg"
    d = A.diagonal()
    d = np.where(d > 0, d, 1.0)
    return sp.diags(1.0 / d), "jacobi"


def _solve_vector(A, b, tol, maxiter, x0=None, restarts: int = 4, M=None):
    """PCG on the true residual: CG's recursive residual drifts on the graded
    meshes, so CG is restarted from its own iterate until ``||b - Ax|| / ||b||``
    is below ``tol``."""
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), {"iterations": 0, "residuals": [0.0], "method": "trivial"}
    if M is None:
        M, kind = _preconditioner(A)
    else:
        kind = "reused"
    history = []

    def cb(xk):
        history.append(float(np.linalg.norm(b - A @ xk)) / bnorm)

    x = x0
    rel = np.inf
    for _ in range(restarts + 1):
        x, status = cg(A, b, x0=x, rtol=0.5 * tol, atol=0.0, maxiter=maxiter, M=M, callback=cb)
        if not np.all(np.isfinite(x)):
            break
        rel = float(np.linalg.norm(b - A @ x)) / bnorm
        if rel < tol or status < 0:
            break
    info = {"iterations": len(history), "residuals": history, "method": f"cg+{kind}",
            "relative_residual": rel}
    if rel < tol:
        return x, info
    if A.shape[0] <= DIRECT_LIMIT or not np.all(np.isfinite(x)) or status < 0:
        # CG stalls at the rounding floor when the graded first layer makes
        # conductances span many decades; a sparse LU reaches that floor directly
        x = spsolve(A.tocsc(), b)
        rel = float(np.linalg.norm(b - A @ x)) / bnorm
        floor = _rounding_floor(A, x, bnorm)
        info.update(method="direct", relative_residual=rel, rounding_floor=floor)
        if rel < max(tol, floor):
            return x, info
    raise SolverError(
        f"CG did not reach relative residual {tol:g} (got {rel:.3g}) in {len(history)} iterations",
        history,
    )


def _rounding_floor(A, x, bnorm) -> float:
    """Residual attainable in double precision: ``64 eps ||A||_inf ||x||_2 / ||b||``."""
    anorm = float(abs(A).sum(axis=1).max())
    return 64 * np.finfo(float).eps * anorm * float(np.linalg.norm(x)) / bnorm


def solve_linear(sys_: SparseSystem, tol: float = 1e-9, maxiter: int = 5000) -> HalfGridFn:
    """Preconditioned CG (smoothed-aggregation AMG above ``AMG_THRESHOLD``
    unknowns, Jacobi below); ``info`` carries the residual history.

    If CG stalls above ``tol``, systems up to ``DIRECT_LIMIT`` unknowns are
    re-solved by sparse LU, which is accepted below ``tol`` or at the
    double-precision floor (``info['rounding_floor']``).  Otherwise
    :class:`SolverError` is raised with the residual history."""
    if sys_.size == 0:
        return HalfGridFn(sys_.mesh, sys_.fixed_values.copy(), {"iterations": 0})
    x, info = _solve_vector(sys_.A_ff, sys_.rhs, tol, maxiter)
    info["unknowns"] = sys_.size
    return HalfGridFn(sys_.mesh, sys_.full(x), info)


def solve(bvp: MixedBVP, mesh: HalfGrid, tol: float = 1e-9) -> HalfGridFn:
    if bvp.semilinear:
        return solve_semilinear(bvp, mesh, tol=max(tol, 1e-7))
    return solve_linear(assemble(bvp, mesh), tol)


def energy_functional(sys_: SparseSystem, U: HalfGridFn) -> float:
    """``1/2 U^T A U - load . U``: minimized over competitors sharing the fixed data."""
    u = U.values.ravel()
    return 0.5 * float(u @ (sys_.A @ u)) - float(sys_.neumann_load @ u)


def flux_residual(sys_: SparseSystem, U: HalfGridFn) -> np.ndarray:
    """Net weighted flux out of each free control volume minus its Neumann load."""
    u = U.values.ravel()
    return (sys_.A @ u - sys_.neumann_load)[sys_.free]


def solve_semilinear(bvp: MixedBVP, mesh: HalfGrid, tol: float = 1e-7,
                     max_iter: int = 200, damping: float = 0.5) -> HalfGridFn:
    """Damped Picard iteration for the critical boundary nonlinearity.

    Each step freezes ``a = trace^{4 sigma / (n - 2 sigma)}`` from the current
    iterate and solves the linear problem with flux ``a * trace``, then
    averages with weight ``damping``.  Stops when successive traces differ by
    less than ``tol`` (sup norm, relative to the trace size).
    """
    if not bvp.semilinear:
        raise ValueError("bvp is not semilinear")
    n, s = mesh.n, bvp.sigma
    q = 4 * s / (n - 2 * s)
    lin = MixedBVP(s, bvp.dirichlet, None, bvp.excluded, bvp.pin_excluded)
    base = assemble(lin, mesh)
    lam = lambda_nodes(mesh, bvp.excluded)
    if bvp.initial is not None:
        U = np.asarray(bvp.initial(mesh.points()), float).reshape(mesh.shape)
    else:
        U = solve_linear(base).values.copy()
    if np.any(U < -1e-12):
        raise ValueError("semilinear iteration needs a nonnegative initial iterate")
    U = np.maximum(U, 0.0)
    vol = mesh.x_volumes()
    flat_idx = np.ravel_multi_index(
        tuple(np.indices(mesh.x_shape).reshape(n, -1)) + (np.zeros(int(np.prod(mesh.x_shape)), int),),
        mesh.shape,
    )
    pos = np.full(mesh.size, -1)
    pos[base.free] = np.arange(base.size)
    flat_free = pos[flat_idx]
    on = flat_free >= 0
    start = float(np.max(U[..., 0]))
    M, _ = _preconditioner(base.A_ff)
    history = []
    for it in range(1, max_iter + 1):
        tr = U[..., 0]
        a = np.where(lam, 0.0, np.maximum(tr, 0.0) ** q) * vol
        D = np.zeros(base.size)
        D[flat_free[on]] = a.ravel()[on]
        K = (base.A_ff - sp.diags(D)).tocsr()
        x, _ = _solve_vector_any(K, base.rhs, x0=U.ravel()[base.free], M=M)
        new = base.full(x).reshape(mesh.shape)
        U_next = (1 - damping) * U + damping * new
        diff = float(np.max(np.abs(U_next[..., 0] - tr)))
        scale = max(float(np.max(np.abs(U_next[..., 0]))), 1e-300)
        history.append(diff / scale)
        U = U_next
        sup = float(np.max(U[..., 0]))
        if not np.isfinite(sup) or (start > 0 and sup > 10 * start):
            raise DivergenceError("trace sup grew tenfold: iteration diverging", history)
        if diff <= tol * scale:
            break
    else:
        raise SolverError("Picard iteration did not converge", history)
    tr = U[..., 0]
    flux = (base.A @ U.ravel()).reshape(mesh.shape)[..., 0]
    target = vol * np.maximum(tr, 0.0) ** (q + 1)
    interior = ~mesh.boundary_mask()[..., 0] & ~lam
    res = float(np.max(np.abs(flux - target)[interior]) / max(np.max(target[interior]), 1e-300))
    info = {"iterations": len(history), "history": history, "residual": res}
    return HalfGridFn(mesh, U, info)


def _solve_vector_any(A, b, x0=None, M=None):
    """Symmetric solve that tolerates mild indefiniteness (semilinear steps)."""
    try:
        return _solve_vector(A, b, 1e-11, 2000, x0=x0, M=M)
    except SolverError:
        x = spsolve(A.tocsc(), b)
        return x, {"method": "direct"}


# ---------------------------------------------------------------- probes


def half_ball_mask(mesh: HalfGrid, R: float, center=None) -> np.ndarray:
    c = np.zeros(mesh.n) if center is None else np.asarray(center, float)
    grids = mesh.mesh()
    r2 = sum((g - ck) ** 2 for g, ck in zip(grids[:-1], c)) + grids[-1] ** 2
    return r2 <= R * R * (1 + 1e-12)


def harnack_quotient(U: HalfGridFn, R: float, center=None) -> float:
    """``sup / inf`` of ``U`` over grid nodes of the closed half-ball of radius ``R/2``."""
    outer = half_ball_mask(U.mesh, R, center)
    if np.any(U.values[outer] <= 0):
        raise ValueError("Harnack quotient needs U > 0 on the half-ball")
    inner = half_ball_mask(U.mesh, R / 2, center)
    v = U.values[inner]
    return float(v.max() / v.min())


def _curved_boundary(mask: np.ndarray) -> np.ndarray:
    """Nodes of ``mask`` with an axis neighbour outside it (t = 0 face excluded)."""
    edge = np.zeros_like(mask)
    nd = mask.ndim
    for k in range(nd):
        for step in (1, -1):
            shifted = np.roll(mask, step, axis=k)
            sl = [slice(None)] * nd
            sl[k] = 0 if step == 1 else -1
            if k == nd - 1 and step == 1:
                shifted[tuple(sl)] = True  # below t = 0 is the flat face, not the curved part
            else:
                shifted[tuple(sl)] = False
            edge |= mask & ~shifted
    return edge


def max_principle_margin(U: HalfGridFn, L: SingularSet | None, delta: float,
                         R: float | None = None, center=None) -> float:
    """``min`` over half-ball nodes at distance ``>= delta`` from ``Lambda x {0}``
    minus ``inf`` over the curved boundary of the half-ball."""
    mesh = U.mesh
    if R is None:
        half = min(min(abs(a[0]), abs(a[-1])) for a in mesh.x_axes)
        R = min(half, mesh.T)
    ball = half_ball_mask(mesh, R, center)
    curved = _curved_boundary(ball)
    pts = mesh.points()
    if is_empty(L):
        far = np.ones(mesh.shape, bool)
    else:
        dx = L.dist(pts[:, :-1])
        far = (np.sqrt(dx ** 2 + pts[:, -1] ** 2) >= delta).reshape(mesh.shape)
    sel = ball & far
    if not sel.any():
        raise ValueError("no nodes left outside the delta-tube")
    return float(U.values[sel].min() - U.values[curved].min())
