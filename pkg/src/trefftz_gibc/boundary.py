"""Boundary solution operators on circles.

Two kinds live here:

* ``ModalBoundaryOperator``: a Fourier multiplier on a circle of radius R,
  either the exact Neumann-to-Dirichlet map with
  gamma_n = H_n(kR) / (k H_n'(kR)) or one of the ABC0-ABC3 substitutes.
  Modes are f_n = (1 / 2 pi) int f(theta) exp(-i n theta) dtheta, so that
  int_{r=R} N f conj(f) dS = 2 pi R sum gamma_n |f_n|^2.

* ``GibcOperator``: the Galerkin solution operator of

      int beta d_s(G eta) conj(d_s xi) - lambda (G eta) conj(xi) ds
          = int eta conj(xi) ds     for all xi in S_H,

  with S_H continuous piecewise polynomials (``gibc_build_fem``) or
  trigonometric polynomials (``gibc_build_trig``).
"""

import math
import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .mesh import gauss_legendre
from .specfun import N_MAX, jy_table

__all__ = [
    "ABC_VARIANTS",
    "ModalBoundaryOperator",
    "GibcOperator",
    "SingularSystemError",
    "Constant",
    "TwoPiece",
    "ntd_coefficient",
    "ntd_coefficients",
    "abc_alpha_beta",
    "abc_gamma",
    "abc_coefficient",
    "apply_modal",
    "modal_trace",
    "arc_modes",
    "split_arcs",
    "gibc_build_fem",
    "gibc_build_trig",
]

ABC_VARIANTS = ("ABC0", "ABC1", "ABC2", "ABC3")


class SingularSystemError(ArithmeticError):
    """A discrete boundary or DG system is singular to working precision."""


# -- Neumann-to-Dirichlet and ABC coefficients ------------------------------


def ntd_coefficients(k, R, M):
    """gamma_n for n = -M..M (gamma_{-n} = gamma_n)."""
    if int(M) != M or not 0 <= M <= N_MAX:
        raise ValueError(f"modal truncation must be an integer in [0, {N_MAX}]")
    M = int(M)
    J, Y = jy_table(M + 1, k * R)
    H = J + 1j * Y
    Hm1 = np.concatenate([[-H[1]], H[:-1]])  # H_{n-1}, with H_{-1} = -H_1
    Hp = 0.5 * (Hm1[: M + 1] - H[1 : M + 2])
    g = H[: M + 1] / (k * Hp)
    return np.concatenate([g[:0:-1], g])


def ntd_coefficient(k, R, n):
    """gamma_n = H_n^(1)(kR) / (k H_n^(1)'(kR))."""
    if not (k > 0 and R > 0):
        raise ValueError("k and R must be positive")
    n = abs(int(n))
    return complex(ntd_coefficients(k, R, n)[-1])


def abc_alpha_beta(variant, k, R):
    """The (alpha, beta) pair of an ABC in the relation
    alpha u + beta Delta_1 u = -du/dr, exactly as tabulated for the
    exp(+i omega t) sign convention."""
    if variant == "ABC0":
        return 1j * k, 0j
    if variant == "ABC1":
        return 1j * k + 1 / (2 * R), 0j
    if variant == "ABC2":
        return 1j * k + 1 / (2 * R) + 1j / (8 * k * R**2), 1j / (2 * k * R**2)
    if variant == "ABC3":
        alpha = 1j * k + 1 / (2 * R) + 1j / (8 * k * R**2) - 1 / (8 * k**2 * R**3)
        beta = 1j / (2 * k * R**2) - 1 / (2 * k**2 * R**3)
        return alpha, beta
    raise ValueError(f"unknown ABC variant {variant!r}; expected one of {ABC_VARIANTS}")


def abc_gamma(variant, k, R, n, convention="tabulated"):
    """Per-mode impedance gamma = alpha - beta n^2 / R^2.

    ``convention="tabulated"`` (default) uses the (alpha, beta) pair as
    tabulated.  ``"outgoing"`` conjugates it, which is the form matching the
    exp(-i omega t) convention of H^(1) radiation used by the solver; only
    that form makes gamma u_n + (du/dr)_n = 0 absorb outgoing waves.
    """
    alpha, beta = abc_alpha_beta(variant, k, R)
    if convention == "outgoing":
        alpha, beta = np.conj(alpha), np.conj(beta)
    elif convention != "tabulated":
        raise ValueError(f"unknown convention {convention!r}")
    n = np.asarray(n)
    return alpha - beta * n**2 / R**2


def abc_coefficient(variant, k, R, n, convention="tabulated"):
    """NtD-like coefficient -1 / gamma so that u_n = coefficient * (du/dr)_n."""
    g = abc_gamma(variant, k, R, n, convention)
    g = np.asarray(g)
    if np.any(g == 0):
        bad = np.atleast_1d(n)[np.atleast_1d(g == 0)]
        raise ZeroDivisionError(f"{variant}: gamma vanishes for mode(s) {bad.tolist()}")
    out = -1.0 / g
    return complex(out) if out.ndim == 0 else out


class ModalBoundaryOperator:
    """Diagonal Fourier multiplier on the circle of radius ``radius``."""

    def __init__(self, radius, M, gamma, kind):
        gamma = np.asarray(gamma, dtype=complex)
        if gamma.shape != (2 * M + 1,):
            raise ValueError("gamma must hold 2M+1 coefficients")
        self.radius = float(radius)
        self.M = int(M)
        self.gamma = gamma
        self.kind = kind

    @classmethod
    def exact_ntd(cls, k, R, M=13):
        return cls(R, M, ntd_coefficients(k, R, M), "ExactNtD")

    @classmethod
    def abc(cls, variant, k, R, M=13, convention="outgoing"):
        n = np.arange(-M, M + 1)
        return cls(R, M, abc_coefficient(variant, k, R, n, convention), variant)

    @classmethod
    def from_kind(cls, kind, k, R, M=13):
        if kind in ("ExactNtD", "NtD", "ntd"):
            return cls.exact_ntd(k, R, M)
        return cls.abc(kind.upper(), k, R, M)

    @property
    def modes(self):
        return np.arange(-self.M, self.M + 1)

    def coefficient(self, n):
        if abs(n) > self.M:
            return 0j
        return self.gamma[n + self.M]

    def apply(self, trace_modes, adjoint=False):
        trace_modes = np.asarray(trace_modes)
        if trace_modes.shape[0] != 2 * self.M + 1:
            raise ValueError(
                f"expected {2 * self.M + 1} modes, got {trace_modes.shape[0]}"
            )
        g = self.gamma.conj() if adjoint else self.gamma
        return g.reshape((-1,) + (1,) * (trace_modes.ndim - 1)) * trace_modes

    def apply_adjoint(self, trace_modes):
        return self.apply(trace_modes, adjoint=True)

    def quadratic_form(self, f_modes):
        """int N f conj(f) dS for a band-limited f."""
        f_modes = np.asarray(f_modes)
        return 2 * np.pi * self.radius * np.sum(self.gamma * np.abs(f_modes) ** 2)


def apply_modal(op, trace_modes, adjoint=False):
    return op.apply(trace_modes, adjoint=adjoint)


def modal_trace(f, M, n_quad=None):
    """Fourier modes f_{-M..M} of a smooth periodic function f(theta).

    Trapezoidal rule on ``n_quad`` equispaced angles (spectrally accurate for
    smooth periodic f).
    """
    M = int(M)
    if n_quad is None:
        n_quad = 4 * M + 4
    if n_quad < 4 * M + 4:
        warnings.warn(
            f"n_quad={n_quad} under-resolves {2 * M + 1} modes (need >= {4 * M + 4})",
            RuntimeWarning,
            stacklevel=2,
        )
    th = 2 * np.pi * np.arange(n_quad) / n_quad
    vals = np.asarray(f(th))
    n = np.arange(-M, M + 1)
    return np.exp(-1j * np.outer(n, th)) @ vals / n_quad


def arc_modes(theta, w_dtheta, values, M):
    """Modes of a function known at quadrature points on arcs.

    ``values`` may carry trailing columns; returns shape (2M+1,) + cols.
    """
    n = np.arange(-M, M + 1)
    E = np.exp(-1j * np.outer(n, theta)) * w_dtheta
    return E @ values / (2 * np.pi)


def split_arcs(theta0, theta1, breakpoints, order):
    """Gauss points on arcs [theta0_e, theta1_e], split at ``breakpoints``.

    Returns ``(edge_index, theta, w_dtheta)`` flattened over all edges.
    """
    t, w = gauss_legendre(order)
    bps = np.mod(np.asarray(breakpoints, dtype=float), 2 * np.pi)
    idx, th, wt = [], [], []
    for e, (a0, a1) in enumerate(zip(theta0, theta1)):
        inner = []
        for b in bps:
            for shift in (-2 * np.pi, 0.0, 2 * np.pi):
                bb = b + shift
                if a0 + 1e-14 < bb < a1 - 1e-14:
                    inner.append(bb)
        cuts = np.concatenate([[a0], np.sort(inner), [a1]])
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            th.append(lo + t * (hi - lo))
            wt.append(w * (hi - lo))
            idx.append(np.full(len(t), e))
    return np.concatenate(idx), np.concatenate(th), np.concatenate(wt)


# -- GIBC coefficients ------------------------------------------------------


class Constant:
    """Constant coefficient on the circle."""

    kind = "constant"

    def __init__(self, value):
        self.value = complex(value)
        self.breakpoints = ()

    def __call__(self, theta):
        return np.full(np.shape(theta), self.value, dtype=complex)

    def __repr__(self):
        return f"Constant({self.value!r})"


class TwoPiece:
    """``first`` on [split0, split1) and ``second`` on the rest of the circle."""

    kind = "two-constant piecewise"

    def __init__(self, first, second, split=(0.0, np.pi)):
        self.first = complex(first)
        self.second = complex(second)
        self.split = tuple(float(s) for s in split)
        self.breakpoints = self.split

    def __call__(self, theta):
        th = np.mod(np.asarray(theta, dtype=float) - self.split[0], 2 * np.pi)
        width = np.mod(self.split[1] - self.split[0], 2 * np.pi)
        return np.where(th < width, self.first, self.second).astype(complex)

    def __repr__(self):
        return f"TwoPiece({self.first!r}, {self.second!r}, split={self.split!r})"


def _as_coefficient(c):
    if callable(c):
        if not hasattr(c, "breakpoints"):
            c.breakpoints = ()
        return c
    return Constant(c)


def _check_gibc_coefficients(beta, lam, n_check=720):
    th = 2 * np.pi * (np.arange(n_check) + 0.5) / n_check
    th = np.concatenate([th, np.asarray(beta.breakpoints, float), np.asarray(lam.breakpoints, float)])
    b = beta(th)
    l_ = lam(th)
    if np.min(b.real) <= 0:
        raise ValueError("GIBC requires Re(beta) >= c > 0 on the whole circle")
    if np.max(b.imag) > 0:
        raise ValueError("GIBC requires Im(beta) <= 0")
    if np.min(l_.imag) < 0:
        raise ValueError("GIBC requires Im(lambda) >= 0")


# -- GIBC solution operator -------------------------------------------------


def _lagrange(P, t):
    """Equispaced Lagrange basis of degree P on [0, 1] and its t-derivative."""
    nodes = np.linspace(0.0, 1.0, P + 1)
    vals = np.ones(t.shape + (P + 1,))
    ders = np.zeros(t.shape + (P + 1,))
    for i in range(P + 1):
        for j in range(P + 1):
            if j == i:
                continue
            f = (t - nodes[j]) / (nodes[i] - nodes[j])
            ders[..., i] = ders[..., i] * f + vals[..., i] / (nodes[i] - nodes[j])
            vals[..., i] *= f
    return vals, ders


class GibcOperator:
    """Discrete GIBC solution operator G^H on the circle of radius ``radius``.

    Coefficient vectors ``c`` represent G^H eta = sum_l c_l xi_l.  Data enter
    through moment ("load") vectors b_m = int eta conj(xi_m) ds, so that

        G^H:      c = S^{-1} b
        G^{H,*}:  c = S^{-H} b
        <G^H eta, zeta>_{L2} = b(zeta)^H S^{-1} b(eta).
    """

    def __init__(self, radius, beta, lam, representation, n_elements=None, P=None, M=None):
        self.radius = float(radius)
        self.beta = _as_coefficient(beta)
        self.lam = _as_coefficient(lam)
        _check_gibc_coefficients(self.beta, self.lam)
        self.representation = representation
        if representation == "fem":
            self.n_elements = int(n_elements)
            self.P = int(P)
            if self.P < 1 or self.n_elements < 3:
                raise ValueError("need P >= 1 and at least 3 boundary elements")
            self.n_basis = self.n_elements * self.P
            self.H = 2 * np.pi * self.radius / self.n_elements
            self.breakpoints = 2 * np.pi * np.arange(self.n_elements) / self.n_elements
        elif representation == "trig":
            self.M = int(M)
            self.n_basis = 2 * self.M + 1
            self.breakpoints = np.array([0.0])
        else:
            raise ValueError(f"unknown representation {representation!r}")
        self._assemble()

    # basis ---------------------------------------------------------------

    def basis(self, theta):
        """(values, d/ds values) as (n_pts, n_basis) matrices (sparse for FEM)."""
        theta = np.mod(np.asarray(theta, dtype=float).ravel(), 2 * np.pi)
        if self.representation == "trig":
            n = np.arange(-self.M, self.M + 1)
            vals = np.exp(1j * np.outer(theta, n))
            return vals, vals * (1j * n / self.radius)
        dth = 2 * np.pi / self.n_elements
        el = np.minimum((theta // dth).astype(np.int64), self.n_elements - 1)
        t = theta / dth - el
        lv, ld = _lagrange(self.P, t)
        ld = ld / (self.radius * dth)
        cols = (el[:, None] * self.P + np.arange(self.P + 1)) % self.n_basis
        rows = np.repeat(np.arange(len(theta)), self.P + 1)
        shape = (len(theta), self.n_basis)
        V = sp.csr_matrix((lv.ravel(), (rows, cols.ravel())), shape=shape)
        D = sp.csr_matrix((ld.ravel(), (rows, cols.ravel())), shape=shape)
        return V, D

    def breakpoints_all(self):
        """Angles where the basis or a coefficient is not smooth."""
        bps = np.concatenate([self.breakpoints, self.beta.breakpoints, self.lam.breakpoints])
        return np.unique(np.mod(bps, 2 * np.pi))

    def _partition(self):
        bps = self.breakpoints_all()
        if self.representation == "trig":
            fine = 2 * np.pi * np.arange(max(16, 2 * self.M + 2)) / max(16, 2 * self.M + 2)
            bps = np.unique(np.concatenate([bps, fine]))
            order = 24
        else:
            order = self.P + 4
        start = np.sort(bps)
        stop = np.concatenate([start[1:], [start[0] + 2 * np.pi]])
        return start, stop, order

    def quadrature(self):
        """Quadrature (theta, ds-weights) resolving basis and coefficients."""
        start, stop, order = self._partition()
        _, th, wt = split_arcs(start, stop, [], order)
        return th, wt * self.radius

    def _assemble(self):
        th, w = self.quadrature()
        V, D = self.basis(th)
        b = self.beta(th)
        lm = self.lam(th)
        VH = V.conj().T
        DH = D.conj().T
        if sp.issparse(V):
            W = sp.diags(w)
            self.mass = (VH @ W @ V).toarray()
            self.S = (DH @ sp.diags(w * b) @ D - VH @ sp.diags(w * lm) @ V).toarray()
        else:
            self.mass = (VH * w) @ V
            self.S = (DH * (w * b)) @ D - (VH * (w * lm)) @ V
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            try:
                self._lu = sla.lu_factor(self.S, check_finite=True)
            except (sla.LinAlgWarning, ValueError, np.linalg.LinAlgError) as exc:
                raise SingularSystemError(
                    "discrete GIBC operator is singular at this resolution"
                ) from exc
        piv = np.abs(np.diag(self._lu[0]))
        self.smallest_pivot = float(piv.min())
        if piv.min() <= 1e3 * np.finfo(float).eps * piv.max():
            raise SingularSystemError(
                f"discrete GIBC operator is singular: smallest pivot {piv.min():.3e}"
            )

    # data in / out -------------------------------------------------------

    def load(self, theta, w_ds, values):
        """Moments int eta conj(xi_m) ds from point samples; values may have columns."""
        V, _ = self.basis(theta)
        values = np.asarray(values)
        wv = values * (w_ds if values.ndim == 1 else w_ds[:, None])
        return np.asarray(V.conj().T @ wv)

    def load_function(self, eta):
        """Moments of a callable eta(theta)."""
        th, w = self.quadrature()
        return self.load(th, w, eta(th))

    def surface_source_load(self, theta, w_ds, u, ds_u, dn_u):
        """Moments of g = div_G(beta grad_G u) + du/dnu + lambda u, integrating
        the surface divergence by parts (no derivatives of beta needed)."""
        V, D = self.basis(theta)
        b = self.beta(theta)
        lm = self.lam(theta)
        return np.asarray(-(D.conj().T @ (w_ds * b * ds_u)) + V.conj().T @ (w_ds * (dn_u + lm * u)))

    def solve(self, b):
        """Coefficients of G^H eta from the moments of eta."""
        return sla.lu_solve(self._lu, b)

    def solve_adjoint(self, b):
        """Coefficients of G^{H,*} zeta from the moments of zeta."""
        return sla.lu_solve(self._lu, b, trans=2)

    def apply(self, eta):
        """G^H eta for a callable eta(theta); returns coefficients."""
        return self.solve(self.load_function(eta))

    def apply_adjoint(self, zeta):
        return self.solve_adjoint(self.load_function(zeta))

    def evaluate(self, c, theta):
        V, _ = self.basis(theta)
        out = V @ c
        return np.asarray(out).reshape(np.shape(theta) + np.shape(c)[1:])

    def inner(self, c, b_other):
        """<G eta, zeta>_{L2} given coefficients of G eta and the moments of zeta."""
        return np.vdot(b_other, c)

    def l2_norm(self, c):
        return math.sqrt(max(0.0, float(np.real(np.vdot(c, self.mass @ c)))))

    def trig_symbol(self, n):
        """1 / (beta n^2 / a^2 - lambda) for constant coefficients."""
        if not (isinstance(self.beta, Constant) and isinstance(self.lam, Constant)):
            raise ValueError("the diagonal symbol needs constant coefficients")
        return 1.0 / (self.beta.value * np.asarray(n) ** 2 / self.radius**2 - self.lam.value)


def gibc_build_fem(a, beta, lam, H, P=1):
    """Continuous piecewise-P boundary FEM on ceil(2 pi a / H) uniform elements."""
    if not (a > 0 and H > 0):
        raise ValueError("radius and boundary mesh size must be positive")
    n_el = int(math.ceil(2 * np.pi * a / H - 1e-9))
    return GibcOperator(a, beta, lam, "fem", n_elements=n_el, P=P)


def gibc_build_trig(a, beta, lam, M):
    """Trigonometric Galerkin space span{exp(i n theta), |n| <= M}."""
    return GibcOperator(a, beta, lam, "trig", M=M)
