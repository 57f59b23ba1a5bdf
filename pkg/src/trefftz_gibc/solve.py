"""Linear solve, field evaluation, error norms and projections."""

import logging
import math
import warnings

import numpy as np
import scipy.sparse.linalg as spla

from .basis import recover_scalar_field
from .boundary import SingularSystemError
from .exact import ExactSeries
from .mesh import edge_quadrature, gauss_legendre, locate_point

__all__ = [
    "SolutionField",
    "solve",
    "evaluate_field",
    "relative_l2_error",
    "series_field",
    "project_field",
    "galerkin_identity",
    "condition_estimate",
]

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


class SolutionField:
    """Discrete solution v_h with u_h = -div v_h / k^2."""

    def __init__(self, coeffs, system, residual, smallest_pivot, lu=None):
        self.coeffs = coeffs
        self.system = system
        self.mesh = system.mesh
        self.basis = system.basis
        self.k = system.basis.k
        self.residual = residual
        self.smallest_pivot = smallest_pivot
        self._lu = lu

    def evaluate(self, x, elements=None):
        x = np.asarray(x, dtype=float)
        if elements is None:
            elements = locate_point(self.mesh, x.reshape(-1, 2)).reshape(x.shape[:-1])
        v, div = self.basis.field(self.coeffs, elements, x)
        return recover_scalar_field(div, self.k), v

    def __call__(self, x):
        return self.evaluate(x)[0]

    def field(self, points, elements):
        return self.basis.field(self.coeffs, elements, points)


def solve(system, refine=3, lu=None):
    """Sparse LU solve with a few steps of iterative refinement."""
    A = system.matrix
    b = system.rhs
    if lu is None:
        try:
            lu = spla.splu(A)
        except RuntimeError as exc:
            raise SingularSystemError(f"DG matrix is singular ({exc}); smallest pivot 0") from exc
    piv = np.abs(lu.U.diagonal())
    smallest = float(piv.min())
    if smallest <= np.finfo(float).eps * piv.max():
        raise SingularSystemError(f"DG matrix is singular to working precision: smallest pivot {smallest:.3e}")
    nb = np.linalg.norm(b)
    if nb == 0:
        x = np.zeros(A.shape[0], dtype=complex)
        return SolutionField(x, system, 0.0, smallest, lu)
    x = lu.solve(b)
    r = b - A @ x
    res = np.linalg.norm(r) / nb
    for _ in range(refine):
        if res <= 1e-14:
            break
        x_new = x + lu.solve(r)
        r_new = b - A @ x_new
        res_new = np.linalg.norm(r_new) / nb
        if res_new >= res:
            break
        x, r, res = x_new, r_new, res_new
    if res > RESIDUAL_TOL:
        log.warning("relative residual %.3e exceeds %.0e", res, RESIDUAL_TOL)
    return SolutionField(x, system, float(res), smallest, lu)


def condition_estimate(solution, seed=0):
    """1-norm condition number estimate of the system matrix.

    The estimator draws random sign vectors from numpy's global generator;
    it is seeded here (and the global state restored) so the value is
    reproducible.
    """
    A = solution.system.matrix
    lu = solution._lu or spla.splu(A)
    n = A.shape[0]
    inv = spla.LinearOperator(
        (n, n), matvec=lu.solve, rmatvec=lambda y: lu.solve(y, trans="H"), dtype=complex
    )
    state = np.random.get_state()
    try:
        np.random.seed(seed)
        return float(spla.onenormest(A) * spla.onenormest(inv))
    finally:
        np.random.set_state(state)


def evaluate_field(obj, x):
    """(u, v) of a discrete solution or an exact series at points x."""
    if isinstance(obj, (SolutionField, ExactSeries)):
        return obj.evaluate(x)
    raise TypeError(f"cannot evaluate {type(obj).__name__}")


def _polar_rule(a, R, k, n_theta=None, n_panels=None, order=8):
    if n_theta is None:
        n_theta = 32 * max(8, math.ceil(k * R))
    if n_panels is None:
        n_panels = 2 * max(2, math.ceil(k * (R - a)))
    # points per wavelength along the outer circle and across the annulus
    ppw_theta = n_theta / (k * R)
    ppw_r = 2 * np.pi * n_panels * order / (k * (R - a))
    if min(ppw_theta, ppw_r) < 10:
        warnings.warn("polar error quadrature has fewer than 10 points per wavelength",
                      RuntimeWarning, stacklevel=3)
    t, w = gauss_legendre(order)
    edges = np.linspace(a, R, n_panels + 1)
    r = (edges[:-1, None] + t[None, :] * np.diff(edges)[:, None]).ravel()
    wr = (w[None, :] * np.diff(edges)[:, None]).ravel()
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    rr, tt = np.meshgrid(r, th, indexing="ij")
    pts = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1).reshape(-1, 2)
    wts = (wr[:, None] * rr * (2 * np.pi / n_theta)).reshape(-1)
    return pts, wts


def relative_l2_error(sol, ref, n_theta=None, n_panels=None, order=8, chunk=40000):
    """||u_sol - u_ref|| / ||u_ref|| in L2 of the annulus on a polar grid
    independent of the DG mesh."""
    mesh = getattr(sol, "mesh", None) or getattr(ref, "mesh", None)
    a = mesh.a if mesh is not None else ref.a
    R = mesh.R if mesh is not None else ref.R
    k = sol.k
    pts, wts = _polar_rule(a, R, k, n_theta, n_panels, order)
    num = den = 0.0
    for s in range(0, len(pts), chunk):
        p = pts[s : s + chunk]
        w = wts[s : s + chunk]
        us = sol(p)
        ur = ref(p)
        num += float(np.sum(w * np.abs(us - ur) ** 2))
        den += float(np.sum(w * np.abs(ur) ** 2))
    if den == 0:
        raise ZeroDivisionError("reference field vanishes")
    return math.sqrt(num / den)


def series_field(series):
    """Field callable (points, elements) -> (v, div v) of an exact series."""
    k = series.k

    def f(points, elements):
        u, v = series.evaluate(points)
        return v, -(k**2) * u

    return f


def project_field(system, fld, order=None):
    """Per-element least-squares fit of (v, div v / k) on the element
    boundary; returns the coefficient vector of the projection."""
    mesh, basis = system.mesh, system.basis
    k, p = basis.k, basis.p
    L = mesh.edge_length()
    order = order or (10 + int(math.ceil(k * float(L.max()))))
    pts, wts, _ = edge_quadrature(mesh, np.arange(mesh.n_edges), order)
    coeffs = np.zeros(basis.n_dofs, dtype=complex)
    te = mesh.triangle_edges
    P = pts[te]  # (nt, 3, q, 2)
    W = np.sqrt(wts[te])
    nt = mesh.n_triangles
    el = np.broadcast_to(np.arange(nt)[:, None, None], P.shape[:-1])
    v, dv = fld(P, el)
    w, dw = basis.evaluate(el, P)  # (nt,3,q,p,2), (nt,3,q,p)
    Amat = np.concatenate(
        [w[..., 0] * W[..., None], w[..., 1] * W[..., None], dw / k * W[..., None]], axis=1
    ).reshape(nt, -1, p)
    rhs = np.concatenate([v[..., 0] * W, v[..., 1] * W, dv / k * W], axis=1).reshape(nt, -1)
    for t in range(nt):
        c, *_ = np.linalg.lstsq(Amat[t], rhs[t], rcond=None)
        coeffs[t * p : (t + 1) * p] = c
    return coeffs


def galerkin_identity(solution):
    """(Im a(v_h, v_h), Im f(v_h)) evaluated independently."""
    sysm = solution.system
    x = solution.coeffs
    return sysm.a(x, x).imag, sysm.f(x).imag
