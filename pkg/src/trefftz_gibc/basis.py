"""Vector plane-wave Trefftz space for grad div v + k^2 v = 0.

On element K the j-th basis field is the gradient of a phase-centred plane
wave,

    w_j(x) = i k d_j exp(i k d_j . (x - x_K)),   div w_j = -k^2 exp(...),

with d_j = (cos 2 pi j / p, sin 2 pi j / p) and x_K the element centroid.
"""

import logging

import numpy as np

__all__ = ["PlaneWaveBasis", "recover_scalar_field"]

log = logging.getLogger(__name__)


class PlaneWaveBasis:
    """Uniform plane-wave basis with ``p`` directions on every element."""

    def __init__(self, k, p, anchors):
        if not k > 0:
            raise ValueError("wavenumber must be positive")
        if int(p) != p or p < 4:
            raise ValueError(f"need an integer number of directions p >= 4, got {p}")
        self.k = float(k)
        self.p = int(p)
        self.anchors = np.asarray(anchors, dtype=float)
        ang = 2 * np.pi * np.arange(self.p) / self.p
        self.angles = ang
        d = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        # Exact axis directions whenever the angle is a multiple of pi/2.
        quarter = np.isclose(np.mod(ang, np.pi / 2), 0) | np.isclose(np.mod(ang, np.pi / 2), np.pi / 2)
        d[quarter] = np.round(d[quarter])
        self.directions = d

    @property
    def n_elements(self):
        return len(self.anchors)

    @property
    def n_dofs(self):
        return self.n_elements * self.p

    def dofs(self, elements):
        """Global dof indices, shape (len(elements), p)."""
        elements = np.asarray(elements)
        return elements[..., None] * self.p + np.arange(self.p)

    def phase(self, elements, x):
        """exp(i k d_j . (x - x_K)) with shape x.shape[:-1] + (p,)."""
        x = np.asarray(x, dtype=float)
        rel = x - self.anchors[np.asarray(elements)]
        return np.exp(1j * self.k * (rel @ self.directions.T))

    def evaluate(self, elements, x):
        """Basis values and divergences at points ``x`` in ``elements``.

        ``elements`` must broadcast against ``x.shape[:-1]``.  Returns
        ``w`` with shape ``x.shape[:-1] + (p, 2)`` and ``divw`` with shape
        ``x.shape[:-1] + (p,)``.
        """
        e = self.phase(elements, x)
        w = 1j * self.k * e[..., None] * self.directions
        return w, -self.k**2 * e

    def eval_basis(self, element, j, x):
        if not 0 <= j < self.p:
            raise IndexError(f"basis index {j} out of range for p={self.p}")
        w, divw = self.evaluate(element, np.asarray(x, dtype=float))
        return w[..., j, :], divw[..., j]

    def trefftz_residual(self, element, j, x):
        """grad div w_j + k^2 w_j from the analytic gradient of div w_j."""
        _, divw = self.eval_basis(element, j, x)
        grad_div = 1j * self.k * divw[..., None] * self.directions[j]
        w, _ = self.eval_basis(element, j, x)
        return grad_div + self.k**2 * w

    def field(self, coeffs, elements, x):
        """Sum of basis fields with coefficients (n_dofs,) -> (v, div v)."""
        coeffs = np.asarray(coeffs)
        c = coeffs[self.dofs(elements)]
        e = self.phase(elements, x) * c
        div = -self.k**2 * e.sum(axis=-1)
        v = 1j * self.k * (e @ self.directions)
        return v, div

    def gram_condition(self, mesh, edge, order=20):
        """Condition number of the trace Gram matrix of one element on one edge."""
        from .mesh import edge_quadrature

        pts, wts, _ = edge_quadrature(mesh, [edge], order)
        el = mesh.edge_triangles[edge, 0]
        w, div = self.evaluate(el, pts[0])
        vals = np.concatenate([w[..., 0], w[..., 1], div / self.k], axis=0)
        ww = np.concatenate([wts[0]] * 3)
        G = (vals.conj().T * ww) @ vals
        cond = np.linalg.cond(G)
        log.debug("trace Gram condition on edge %d: %.3e", edge, cond)
        return cond


def recover_scalar_field(divw_value, k):
    """Scalar field u = -div v / k^2."""
    if not k > 0:
        raise ValueError("wavenumber must be positive")
    return -divw_value / k**2
