"""Assembly of the Trefftz DG system.

Conventions
-----------
* ``A[i, j] = a(phi_j, phi_i)``: column = trial, row = test, and the test
  function is always conjugated, so a(u, w) = w^H A u and f(w) = w^H rhs.
* On an interior edge, ``edge_triangles[e, 0]`` is the "minus" side and the
  edge normal nu is its outward normal.
* On both circles nu is the radial unit vector: on r = R it points out of the
  computational domain, on r = a it points out of the scatterer (into the
  domain).

The sesquilinear form is kept as two sparse matrices, ``A0`` (the part with
purely real diagonal values on Trefftz fields) and ``B`` (the stabilising part
whose imaginary diagonal values define the DG norm).
"""

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import __version__
from .boundary import GibcOperator, ModalBoundaryOperator, arc_modes, split_arcs
from .mesh import EdgeClass, default_edge_order, edge_quadrature

__all__ = [
    "FluxParams",
    "DirichletCondition",
    "GibcCondition",
    "DGSystem",
    "assemble_system",
    "interior_edge_block",
    "discrete_field",
    "SYSTEM_FORMAT_VERSION",
]

log = logging.getLogger(__name__)

SYSTEM_FORMAT_VERSION = 1


@dataclass
class FluxParams:
    """Stabilisation parameters.  ``alpha1``/``alpha2`` may be scalars or
    per-edge arrays (indexed by global edge number)."""

    alpha1: object = 0.5
    alpha2: object = 0.5
    delta: float = 0.5
    tau: float = 0.5
    tau_d: float = 0.5

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "delta", "tau", "tau_d"):
            val = np.asarray(getattr(self, name), dtype=float)
            if val.size == 0 or not np.all(np.isfinite(val)) or np.any(val <= 0):
                raise ValueError(f"flux parameter {name} must be strictly positive")

    def on_edges(self, name, edges):
        val = np.asarray(getattr(self, name), dtype=float)
        return np.broadcast_to(val, (len(edges),)) if val.ndim == 0 else val[edges]

    def as_dict(self):
        out = {}
        for k_, v in asdict(self).items():
            v = np.asarray(v)
            out[k_] = float(v) if v.ndim == 0 else v.tolist()
        return out


@dataclass
class DirichletCondition:
    """u = u_D on r = a; ``datum(x)`` returns u_D at points (..., 2)."""

    datum: object
    kind: str = field(default="dirichlet", init=False)


@dataclass
class GibcCondition:
    """Impedance relation on r = a with source generated by ``incident``
    (an object with ``polar_trace(radius, theta)``), or no source."""

    operator: GibcOperator
    incident: object = None
    kind: str = field(default="gibc", init=False)


def discrete_field(basis, coeffs):
    """Field callable (points, elements) -> (v, div v) of a coefficient vector."""
    coeffs = np.asarray(coeffs)

    def f(points, elements):
        return basis.field(coeffs, elements, points)

    return f


def _trace_terms(k, s_a, s_b, un_a, dv_a, un_b, dv_b, w, a1, a2):
    """Interior-edge integrands for trial side a and test side b.

    Inputs have shape (E, q, p); returns (A0, B) blocks of shape (E, p_b, p_a).
    """
    wn_b = (un_b * w[..., None]).conj()
    wd_b = (dv_b * w[..., None]).conj()
    a0 = 0.5 * s_b * (np.einsum("eqj,eqi->eji", wn_b, dv_a) - np.einsum("eqj,eqi->eji", wd_b, un_a))
    pen = (1j * k * s_a * s_b) * a1[:, None, None] * np.einsum("eqj,eqi->eji", wn_b, un_a)
    pen -= (s_a * s_b / (1j * k)) * a2[:, None, None] * np.einsum("eqj,eqi->eji", wd_b, dv_a)
    return a0, pen


def interior_edge_block(mesh, basis, params, edge, order=None):
    """Local blocks of one interior edge.

    Returns ``(dofs_minus, dofs_plus, A0, B)`` where ``A0[b][a]`` and
    ``B[b][a]`` are the (p, p) blocks for test side b, trial side a
    (0 = minus, 1 = plus).
    """
    if mesh.edge_class[edge] != EdgeClass.INTERIOR:
        raise ValueError("not an interior edge")
    L = float(mesh.edge_length(edge))
    order = order or default_edge_order(basis.k, L)
    pts, wts, nrm = edge_quadrature(mesh, [edge], order)
    t = mesh.edge_triangles[[edge]]
    sides = []
    for s in (0, 1):
        w, dv = basis.evaluate(t[:, s, None], pts)
        sides.append((np.einsum("eqpi,eqi->eqp", w, nrm), dv))
    a1 = params.on_edges("alpha1", [edge])
    a2 = params.on_edges("alpha2", [edge])
    sign = (1.0, -1.0)
    A0 = [[None, None], [None, None]]
    B = [[None, None], [None, None]]
    for b in (0, 1):
        for a in (0, 1):
            x0, x1 = _trace_terms(basis.k, sign[a], sign[b], *sides[a], *sides[b], wts, a1, a2)
            A0[b][a], B[b][a] = x0[0], x1[0]
    return basis.dofs(t[0, 0]), basis.dofs(t[0, 1]), A0, B


class _Coo:
    """Accumulates (row, col, value) triplets in a fixed order."""

    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []

    def add_blocks(self, rows, cols, blocks):
        # rows (E, pb), cols (E, pa), blocks (E, pb, pa)
        r = np.broadcast_to(rows[:, :, None], blocks.shape)
        c = np.broadcast_to(cols[:, None, :], blocks.shape)
        self.rows.append(r.ravel())
        self.cols.append(c.ravel())
        self.vals.append(blocks.ravel())

    def add_dense(self, dofs, block):
        r, c = np.meshgrid(dofs, dofs, indexing="ij")
        self.rows.append(r.ravel())
        self.cols.append(c.ravel())
        self.vals.append(np.asarray(block).ravel())

    def add_sparse(self, dofs, mat):
        m = sp.coo_matrix(mat)
        self.rows.append(dofs[m.row])
        self.cols.append(dofs[m.col])
        self.vals.append(m.data)

    def tocsr(self, n):
        if not self.rows:
            return sp.csr_matrix((n, n), dtype=complex)
        m = sp.coo_matrix(
            (np.concatenate(self.vals).astype(complex),
             (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(n, n),
        )
        return m.tocsr()


class _CircleTrace:
    """Quadrature on one circle with the adjacent element of every point."""

    def __init__(self, mesh, basis, cls, breakpoints=(), extra_order=0):
        self.edges = mesh.edges_of(cls)
        self.radius = mesh.a if cls == EdgeClass.GAMMA else mesh.R
        arc = mesh.edge_arc[self.edges]
        L = float(np.max(mesh.edge_length(self.edges)))
        self.order = default_edge_order(basis.k, L) + int(extra_order)
        idx, th, wdth = split_arcs(arc[:, 1], arc[:, 2], breakpoints, self.order)
        self.theta = th
        self.w_dtheta = wdth
        self.w = wdth * self.radius
        self.elements = mesh.edge_triangles[self.edges[idx], 0]
        self.nu = np.stack([np.cos(th), np.sin(th)], axis=1)
        self.points = self.radius * self.nu
        # boundary elements and local dof columns
        self.bnd_elements, local = np.unique(self.elements, return_inverse=True)
        self.dofs = basis.dofs(self.bnd_elements).ravel()
        p = basis.p
        n = len(th)
        w, dv = basis.evaluate(self.elements, self.points)
        un = np.einsum("qpi,qi->qp", w, self.nu)
        cols = (local[:, None] * p + np.arange(p)).ravel()
        rows = np.repeat(np.arange(n), p)
        shape = (n, len(self.dofs))
        self.U = sp.csr_matrix((un.ravel(), (rows, cols)), shape=shape)  # phi . nu
        self.D = sp.csr_matrix((dv.ravel(), (rows, cols)), shape=shape)  # div phi
        self.W = sp.diags(self.w)

    def local(self, left, right):
        """sum_q w_q conj(left[q, b]) right[q, a] as a sparse block."""
        return (left.conj().T @ self.W @ right).tocsr()

    def field_values(self, fld):
        v, dv = fld(self.points, self.elements)
        return np.einsum("qi,qi->q", v, self.nu), dv


class DGSystem:
    """Assembled discrete problem with split evaluators for its forms."""

    def __init__(self, mesh, basis, params, sigma_op, gamma_condition, A0, B, rhs,
                 meta, sigma, gamma, interior):
        self.mesh = mesh
        self.basis = basis
        self.params = params
        self.sigma_op = sigma_op
        self.gamma_condition = gamma_condition
        self.A0 = A0
        self.B = B
        self.rhs = rhs
        self.meta = meta
        self._sigma = sigma
        self._gamma = gamma
        self._interior = interior
        self._matrix = None

    @property
    def n_dofs(self):
        return self.basis.n_dofs

    @property
    def matrix(self):
        if self._matrix is None:
            self._matrix = (self.A0 + self.B).tocsc()
        return self._matrix

    def dof_map(self, element, j):
        return int(self.basis.dofs(element)[j])

    # quadratic and bilinear forms on coefficient vectors --------------------
    def a(self, u, w):
        return complex(np.vdot(w, self.matrix @ u))

    def a0(self, u, w):
        return complex(np.vdot(w, self.A0 @ u))

    def b(self, u, w):
        return complex(np.vdot(w, self.B @ u))

    def f(self, w):
        return complex(np.vdot(w, self.rhs))

    def dg_norm(self, u):
        return math.sqrt(max(0.0, self.b(u, u).imag))

    # field-based evaluation (for fields outside the discrete space) ----------
    def skeleton_terms(self, fld):
        """Integral pieces of the DG and DG+ norms for a field callable
        ``fld(points, elements) -> (v, div v)`` that is Trefftz per element."""
        k = self.basis.k
        prm = self.params
        t = {
            "jump": 0.0, "jump_div": 0.0, "avg_div": 0.0, "avg": 0.0,
            "sigma_residual": 0.0, "sigma_im": 0.0, "sigma_trace": 0.0,
            "gamma_residual": 0.0, "gamma_im": 0.0, "gamma_trace": 0.0,
        }
        for edges, pts, wts, nrm in self._interior:
            tri = self.mesh.edge_triangles[edges]
            vm, dm = fld(pts, np.broadcast_to(tri[:, 0, None], pts.shape[:2]))
            vp, dp = fld(pts, np.broadcast_to(tri[:, 1, None], pts.shape[:2]))
            a1 = prm.on_edges("alpha1", edges)[:, None]
            a2 = prm.on_edges("alpha2", edges)[:, None]
            jn = np.einsum("eqi,eqi->eq", vm - vp, nrm)
            t["jump"] += float(np.sum(wts * k * a1 * np.abs(jn) ** 2))
            t["jump_div"] += float(np.sum(wts * a2 / k * np.abs(dm - dp) ** 2))
            t["avg_div"] += float(np.sum(wts / (k * a1) * np.abs(0.5 * (dm + dp)) ** 2))
            t["avg"] += float(np.sum(wts * k / a2 * np.sum(np.abs(0.5 * (vm + vp)) ** 2, axis=-1)))
        s = self._sigma
        un, dv = s.field_values(fld)
        fm = arc_modes(s.theta, s.w_dtheta, un, self.sigma_op.M)
        gf = self.sigma_op.apply(fm)
        n = self.sigma_op.modes
        Nf = np.exp(1j * np.outer(s.theta, n)) @ gf
        t["sigma_residual"] = float(np.sum(s.w * prm.delta / k * np.abs(dv + k**2 * Nf) ** 2))
        t["sigma_im"] = float(-(k**2) * self.sigma_op.quadratic_form(fm).imag)
        t["sigma_trace"] = float(np.sum(s.w * k / prm.delta * np.abs(un) ** 2))
        g = self._gamma
        un, dv = g.field_values(fld)
        if self.gamma_condition.kind == "gibc":
            op = self.gamma_condition.operator
            bm = op.load(g.theta, g.w, un)
            c = op.solve(bm)
            Gu = op.evaluate(c, g.theta)
            tau = prm.tau
            t["gamma_residual"] = float(np.sum(g.w * tau / k * np.abs(dv + k**2 * Gu) ** 2))
            t["gamma_im"] = float(k**2 * np.vdot(bm, c).imag)
        else:
            tau = prm.tau_d
            t["gamma_residual"] = float(np.sum(g.w * tau / k * np.abs(dv) ** 2))
        t["gamma_trace"] = float(np.sum(g.w * k / tau * np.abs(un) ** 2))
        return t

    def dg_norm_field(self, fld):
        t = self.skeleton_terms(fld)
        val = (t["jump"] + t["jump_div"] + t["sigma_residual"] + t["sigma_im"]
               + t["gamma_residual"] + t["gamma_im"])
        return math.sqrt(max(0.0, val))

    def dg_plus_norm_field(self, fld):
        t = self.skeleton_terms(fld)
        val = (t["jump"] + t["jump_div"] + t["sigma_residual"] + t["sigma_im"]
               + t["gamma_residual"] + t["gamma_im"]
               + t["avg_div"] + t["avg"] + t["sigma_trace"] + t["gamma_trace"])
        return math.sqrt(max(0.0, val))

    def dg_plus_norm(self, u):
        return self.dg_plus_norm_field(discrete_field(self.basis, u))

    # export ------------------------------------------------------------------
    def dump(self, stem):
        """Write ``<stem>.mtx`` (matrix) and ``<stem>_rhs.mtx`` (vector)."""
        comment = (f"trefftz_gibc DG system, format version {SYSTEM_FORMAT_VERSION}, "
                   f"code {__version__}; row = test dof, column = trial dof, "
                   f"dof = element * p + direction")
        scipy.io.mmwrite(f"{stem}.mtx", self.matrix.tocoo(), comment=comment, field="complex")
        scipy.io.mmwrite(f"{stem}_rhs.mtx", self.rhs.reshape(-1, 1), comment=comment,
                         field="complex")
        return f"{stem}.mtx", f"{stem}_rhs.mtx"


def _interior_groups(mesh, basis, extra_order=0):
    edges = mesh.edges_of(EdgeClass.INTERIOR)
    orders = np.array([default_edge_order(basis.k, L) for L in mesh.edge_length(edges)]) + extra_order
    groups = []
    for q in np.unique(orders):
        sel = edges[orders == q]
        pts, wts, nrm = edge_quadrature(mesh, sel, int(q))
        groups.append((sel, pts, wts, nrm))
    return groups


def assemble_system(mesh, basis, params, sigma_op, gamma_condition, extra_order=0):
    """Assemble matrix and right-hand side of the discrete problem."""
    if not isinstance(sigma_op, ModalBoundaryOperator):
        raise TypeError("sigma_op must be a ModalBoundaryOperator")
    if not math.isclose(sigma_op.radius, mesh.R, rel_tol=1e-12):
        raise ValueError("modal operator radius does not match the outer circle")
    if gamma_condition.kind == "gibc" and not math.isclose(
        gamma_condition.operator.radius, mesh.a, rel_tol=1e-12
    ):
        raise ValueError("GIBC operator radius does not match the inner circle")
    if len(basis.anchors) != mesh.n_triangles:
        raise ValueError("basis and mesh disagree on the number of elements")
    k = basis.k
    N = basis.n_dofs
    A0 = _Coo()
    Bm = _Coo()
    rhs = np.zeros(N, dtype=complex)

    # interior skeleton
    interior = _interior_groups(mesh, basis, extra_order)
    sign = (1.0, -1.0)
    for edges, pts, wts, nrm in interior:
        tri = mesh.edge_triangles[edges]
        sides = []
        for s in (0, 1):
            w, dv = basis.evaluate(tri[:, s, None], pts)
            sides.append((np.einsum("eqpi,eqi->eqp", w, nrm), dv))
        a1 = params.on_edges("alpha1", edges)
        a2 = params.on_edges("alpha2", edges)
        for b in (0, 1):
            for a in (0, 1):
                x0, x1 = _trace_terms(k, sign[a], sign[b], *sides[a], *sides[b], wts, a1, a2)
                rows = basis.dofs(tri[:, b])
                cols = basis.dofs(tri[:, a])
                A0.add_blocks(rows, cols, x0)
                Bm.add_blocks(rows, cols, x1)

    # outer circle: modal operator
    M = sigma_op.M
    dth = 2 * np.pi / mesh.n_theta
    sig = _CircleTrace(mesh, basis, EdgeClass.SIGMA_R, (), extra_order + math.ceil(M * dth))
    T = arc_modes(sig.theta, sig.w_dtheta, sig.U, M)
    Dm = arc_modes(sig.theta, sig.w_dtheta, sig.D, M)
    T = np.asarray(T)
    Dm = np.asarray(Dm)
    gam = sigma_op.gamma[:, None]
    twopiR = 2 * np.pi * mesh.R
    NT = gam * T
    A0.add_sparse(sig.dofs, -sig.local(sig.D, sig.U))
    dense = -(k**2) * twopiR * (T.conj().T @ NT)
    dense -= (params.delta / (1j * k)) * twopiR * (
        k**2 * (Dm.conj().T @ NT) + k**2 * (NT.conj().T @ Dm) + k**4 * (NT.conj().T @ NT)
    )
    Bm.add_dense(sig.dofs, dense)
    Bm.add_sparse(sig.dofs, -(params.delta / (1j * k)) * sig.local(sig.D, sig.D))
    # discarded modal energy of the basis traces (informational)
    total = np.asarray(abs(sig.U.multiply(sig.U.conj())).T @ sig.w_dtheta).ravel() / (2 * np.pi)
    kept = np.sum(np.abs(T) ** 2, axis=0)
    loss = float(np.max(1.0 - kept / np.where(total > 0, total, 1.0)))
    # Arc-supported traces are never band limited, so this is large by design;
    # it is reported, not treated as an accuracy warning.
    log.info("modal truncation M=%d discards up to %.3g of a single basis trace's energy "
             "on the outer circle", M, loss)

    # inner circle
    cond = gamma_condition
    if cond.kind == "gibc":
        op = cond.operator
        gam_c = _CircleTrace(mesh, basis, EdgeClass.GAMMA, op.breakpoints_all(), extra_order + _gibc_extra(op, mesh))
        tau = params.tau
        V, _ = op.basis(gam_c.theta)
        VW = V.conj().T @ sp.diags(gam_c.w) if sp.issparse(V) else V.conj().T * gam_c.w
        Bn = np.asarray((VW @ gam_c.U).todense()) if sp.issparse(VW) else np.asarray(VW @ gam_c.U)
        Bd = np.asarray((VW @ gam_c.D).todense()) if sp.issparse(VW) else np.asarray(VW @ gam_c.D)
        C = op.solve(Bn)
        MC = op.mass @ C
        A0.add_sparse(gam_c.dofs, gam_c.local(gam_c.D, gam_c.U))
        dense = k**2 * (Bn.conj().T @ C)
        dense -= (tau / (1j * k)) * (k**2 * (Bd.conj().T @ C) + k**2 * (C.conj().T @ Bd)
                                     + k**4 * (C.conj().T @ MC))
        Bm.add_dense(gam_c.dofs, dense)
        Bm.add_sparse(gam_c.dofs, -(tau / (1j * k)) * gam_c.local(gam_c.D, gam_c.D))
        if cond.incident is not None:
            u, ds_u, dn_u = cond.incident.polar_trace(mesh.a, gam_c.theta)
            cg = op.solve(op.surface_source_load(gam_c.theta, gam_c.w, u, ds_u, dn_u))
            r = -(k**2) * (Bn.conj().T @ cg)
            r += (tau / (1j * k)) * k**2 * (Bd.conj().T @ cg + k**2 * (C.conj().T @ (op.mass @ cg)))
            rhs[gam_c.dofs] += r
    elif cond.kind == "dirichlet":
        gam_c = _CircleTrace(mesh, basis, EdgeClass.GAMMA, (), extra_order)
        tau = params.tau_d
        A0.add_sparse(gam_c.dofs, gam_c.local(gam_c.D, gam_c.U))
        Bm.add_sparse(gam_c.dofs, -(tau / (1j * k)) * gam_c.local(gam_c.D, gam_c.D))
        uD = np.asarray(cond.datum(gam_c.points), dtype=complex)
        wu = gam_c.w * uD
        r = -(k**2) * (gam_c.U.conj().T @ wu) + (tau / (1j * k)) * k**2 * (gam_c.D.conj().T @ wu)
        rhs[gam_c.dofs] += r
    else:
        raise ValueError(f"unknown inner boundary condition {cond.kind!r}")

    A0m = A0.tocsr(N)
    Bmat = Bm.tocsr(N)
    meta = {
        "code_version": __version__,
        "n_dofs": N,
        "n_elements": mesh.n_triangles,
        "p": basis.p,
        "k": k,
        "h": mesh.h,
        "flux_params": params.as_dict(),
        "sigma_kind": sigma_op.kind,
        "modal_truncation_M": M,
        "modal_truncation_loss": loss,
        "gamma_kind": cond.kind,
        "quadrature": {"interior_extra": extra_order, "sigma_order": sig.order, "gamma_order": gam_c.order},
        "layout": {
            "interior": "block-sparse, p x p blocks per element pair sharing an edge",
            "sigma_dense_block_dofs": int(len(sig.dofs)),
            "gamma_dense_block_dofs": int(len(gam_c.dofs)) if cond.kind == "gibc" else 0,
        },
        "nnz": int((A0m + Bmat).nnz),
    }
    return DGSystem(mesh, basis, params, sigma_op, cond, A0m, Bmat, rhs, meta, sig, gam_c, interior)


def _gibc_extra(op, mesh):
    if op.representation == "fem":
        return op.P
    return math.ceil(op.M * 2 * np.pi / mesh.n_theta)
