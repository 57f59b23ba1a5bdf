"""Separable reference solutions on the annulus and the incident plane wave.

Each mode of the scattered field is written in a normalised cylinder basis,

    u_n(r) = A_n J_n(kr) / J_n(kR) + B_n Y_n(kr) / Y_n(ka),

which stays well conditioned for orders far above kR (the Hankel pair
H^(1), H^(2) becomes numerically dependent there).  The equivalent Hankel
coefficients

    u_n(r) = a_n H_n^(1)(kr) + b_n H_n^(2)(kr)

are available through ``hankel_coefficients`` for checks against the 2x2
mode systems.
"""

from dataclasses import dataclass

import numpy as np

from .boundary import abc_gamma, ntd_coefficients
from .specfun import jy_table

__all__ = [
    "PlaneWave",
    "ExactSeries",
    "exact_abc_series",
    "exact_scattering_series",
    "exact_gibc_series",
]


@dataclass(frozen=True)
class PlaneWave:
    """Incident field u^i(x) = amplitude * exp(i k d . x), d = (cos t, sin t)."""

    k: float
    angle: float = 0.0
    amplitude: complex = 1.0

    @property
    def direction(self):
        return np.array([np.cos(self.angle), np.sin(self.angle)])

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.exp(1j * self.k * (x @ self.direction))

    def gradient(self, x):
        return 1j * self.k * self.value(x)[..., None] * self.direction

    def polar_trace(self, radius, theta):
        """(u, d_s u, d_r u) on the circle r = radius at angles theta."""
        theta = np.asarray(theta, dtype=float)
        er = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        et = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
        x = radius * er
        u = self.value(x)
        g = self.gradient(x)
        return u, np.einsum("...i,...i->...", g, et), np.einsum("...i,...i->...", g, er)

    def modes(self, M):
        """Jacobi-Anger factors i^n exp(-i n angle) for n = -M..M."""
        n = np.arange(-M, M + 1)
        return self.amplitude * (1j ** (n % 4)) * np.exp(-1j * n * self.angle)


def _signed_rows(table, M):
    """Rows n = -M..M from a table over n = 0..M+1, plus derivative rows."""
    n = np.arange(-M, M + 1)
    sgn = np.where((n < 0) & (n % 2 != 0), -1.0, 1.0).reshape((-1,) + (1,) * (table.ndim - 1))
    val = sgn * table[np.abs(n)]
    # C_n' = (C_{n-1} - C_{n+1}) / 2 with C_{-m} = (-1)^m C_m
    lo = np.abs(n - 1)
    hi = np.abs(n + 1)
    sl = np.where((n - 1 < 0) & ((n - 1) % 2 != 0), -1.0, 1.0).reshape(sgn.shape)
    sh = np.where((n + 1 < 0) & ((n + 1) % 2 != 0), -1.0, 1.0).reshape(sgn.shape)
    der = 0.5 * (sl * table[lo] - sh * table[hi])
    return val, der


class ExactSeries:
    """Mode-by-mode reference solution u = sum_n u_n(r) exp(i n theta).

    ``inner`` is ``"dirichlet"`` (u = -u^i on r = a) or ``"gibc"``
    (constant beta, lam with the total field satisfying the homogeneous
    impedance relation).  ``outer`` is an array of impedances gamma_n in
    gamma_n u_n + u_n' = 0 on r = R, or ``None`` for the radiating solution
    (a pure H^(1) expansion).
    """

    def __init__(self, kind, k, a, R, M_exact, incident, inner="dirichlet",
                 outer=None, beta=None, lam=None):
        if not (R > a > 0 and k > 0):
            raise ValueError("need R > a > 0 and k > 0")
        self.kind = kind
        self.k = float(k)
        self.a = float(a)
        self.R = float(R)
        self.M = int(M_exact)
        self.incident = incident
        self.inner = inner
        self.outer = None if outer is None else np.asarray(outer, dtype=complex)
        self.beta = beta
        self.lam = lam
        self._solve_modes()

    # --------------------------------------------------------------- modes
    def _inner_rows(self):
        """Inner condition c0 u_n(a) + c1 u_n'(a) = rhs_n per mode."""
        M, k, a = self.M, self.k, self.a
        n = np.arange(-M, M + 1)
        Ja, Jpa = _signed_rows(jy_table(M + 1, k * a)[0], M)
        inc = self.incident.modes(M)
        if self.inner == "dirichlet":
            return np.ones(n.shape), np.zeros(n.shape), -inc * Ja
        if self.inner == "gibc":
            c0 = -self.beta * n**2 / a**2 + self.lam
            return c0, np.ones(n.shape), -inc * (c0 * Ja + k * Jpa)
        raise ValueError(f"unknown inner condition {self.inner!r}")

    def _solve_modes(self):
        M, k, a, R = self.M, self.k, self.a, self.R
        c0, c1, rhs = self._inner_rows()
        if self.outer is None:
            J, Y = jy_table(M + 1, k * a)
            Hv, Hd = _signed_rows(J + 1j * Y, M)
            self._C = rhs / (c0 + c1 * k * Hd / Hv)
            self._A = self._B = None
            return
        if self.outer.shape != (2 * M + 1,):
            raise ValueError("outer impedances must cover n = -M..M")
        Ja, Ya = jy_table(M + 1, k * a)
        JR, YR = jy_table(M + 1, k * R)
        ja, jpa = _signed_rows(Ja, M)
        ya, ypa = _signed_rows(Ya, M)
        jr, jpr = _signed_rows(JR, M)
        yr, ypr = _signed_rows(YR, M)
        g = self.outer
        # unknowns (A, B) with u_n = A J(kr)/J(kR) + B Y(kr)/Y(ka)
        m11 = (c0 * ja + c1 * k * jpa) / jr
        m12 = (c0 * ya + c1 * k * ypa) / ya
        m21 = (g * jr + k * jpr) / jr
        m22 = (g * yr + k * ypr) / ya
        det = m11 * m22 - m12 * m21
        if np.any(det == 0) or not np.all(np.isfinite(det)):
            bad = np.arange(-M, M + 1)[(det == 0) | ~np.isfinite(det)]
            raise ArithmeticError(f"mode system singular for n = {bad.tolist()}")
        self._A = rhs * m22 / det
        self._B = -rhs * m21 / det
        self._jr, self._ya = jr, ya
        self._C = None

    def hankel_coefficients(self):
        """(a_n, b_n) for n = -M..M."""
        if self._C is not None:
            J, Y = jy_table(self.M + 1, self.k * self.a)
            Hv, _ = _signed_rows(J + 1j * Y, self.M)
            return self._C / Hv, np.zeros_like(self._C)
        p = self._A / self._jr  # coefficient of J_n
        q = self._B / self._ya  # coefficient of Y_n
        return 0.5 * (p - 1j * q), 0.5 * (p + 1j * q)

    def mode_system(self, n):
        """Hankel-form 2x2 system of mode n: rows are the outer impedance
        relation (rhs 0) and the inner Dirichlet condition."""
        if self.outer is None or self.inner != "dirichlet":
            raise ValueError("the 2x2 Hankel system needs a Dirichlet/impedance series")
        k = self.k
        J, Y = jy_table(abs(n) + 1, np.array([k * self.R, k * self.a]))
        H = J + 1j * Y
        H1 = _signed_single(H, n)
        H1p = 0.5 * (_signed_single(H, n - 1) - _signed_single(H, n + 1))
        H2, H2p = np.conj(H1), np.conj(H1p)
        gam = self.outer[n + self.M]
        mat = np.array([[gam * H1[0] + k * H1p[0], gam * H2[0] + k * H2p[0]],
                        [H1[1], H2[1]]])
        rhs = np.array([0.0, -self.incident.modes(self.M)[n + self.M] * _signed_single(J, n)[1]])
        return mat, rhs

    def mode_residual(self, n):
        """Normwise backward error ||Mx - f|| / (||M|| ||x|| + ||f||) of
        (a_n, b_n) in the 2x2 system of mode n."""
        mat, rhs = self.mode_system(n)
        an, bn = self.hankel_coefficients()
        x = np.array([an[n + self.M], bn[n + self.M]])
        scale = np.linalg.norm(mat, 2) * np.linalg.norm(x) + np.linalg.norm(rhs)
        return float(np.linalg.norm(mat @ x - rhs) / scale) if scale > 0 else 0.0

    # ----------------------------------------------------------- evaluation
    def radial(self, r):
        """u_n(r) and u_n'(r) with shape (2M+1,) + r.shape."""
        r = np.asarray(r, dtype=float)
        M, k = self.M, self.k
        J, Y = jy_table(M + 1, k * r)
        if self._C is not None:
            H = J + 1j * Y
            hv, hd = _signed_rows(H, M)
            Ja, Ya = jy_table(M + 1, k * self.a)
            Ha, _ = _signed_rows(Ja + 1j * Ya, M)
            c = (self._C / Ha).reshape((-1,) + (1,) * r.ndim)
            return c * hv, c * k * hd
        jv, jd = _signed_rows(J, M)
        yv, yd = _signed_rows(Y, M)
        sh = (-1,) + (1,) * r.ndim
        p = (self._A / self._jr).reshape(sh)
        q = (self._B / self._ya).reshape(sh)
        with np.errstate(invalid="ignore", over="ignore"):
            yterm = np.where(q == 0, 0.0, q * yv)
            ydterm = np.where(q == 0, 0.0, q * yd)
        return p * jv + yterm, k * (p * jd + ydterm)

    def evaluate(self, x):
        """(u, v = grad u) of the scattered field at points x (..., 2)."""
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1])
        if np.any(r < self.a * (1 - 1e-10)):
            raise ValueError("point inside the scatterer")
        th = np.arctan2(x[..., 1], x[..., 0])
        un, dun = self.radial(r)
        n = np.arange(-self.M, self.M + 1).reshape((-1,) + (1,) * r.ndim)
        e = np.exp(1j * n * th)
        u = np.sum(un * e, axis=0)
        ur = np.sum(dun * e, axis=0)
        ut = np.sum(1j * n * un * e, axis=0) / r
        c, s = np.cos(th), np.sin(th)
        v = np.stack([ur * c - ut * s, ur * s + ut * c], axis=-1)
        return u, v

    def __call__(self, x):
        return self.evaluate(x)[0]

    def boundary_residual(self, n_theta=721):
        """sup over theta of |u(a, theta) + u^i(a, theta)| (Dirichlet check)."""
        th = 2 * np.pi * np.arange(n_theta) / n_theta
        x = self.a * np.stack([np.cos(th), np.sin(th)], axis=-1)
        u, _ = self.evaluate(x)
        return float(np.max(np.abs(u + self.incident.value(x))))


def _signed_single(table, n):
    m = abs(n)
    return table[m] * ((-1.0) ** m if n < 0 else 1.0)


def _outer_impedance(variant, k, R, M):
    n = np.arange(-M, M + 1)
    if variant in ("ABC0", "ABC1", "ABC2", "ABC3"):
        return abc_gamma(variant, k, R, n, convention="outgoing")
    if variant == "ExactNtD":
        return -1.0 / ntd_coefficients(k, R, M)
    raise ValueError(f"unknown outer condition {variant!r}")


def exact_abc_series(variant, k, a, R, M_exact=40, incident=None):
    """Exact solution with u = -u^i on r = a and the chosen absorbing
    relation on r = R.  For ``"ExactNtD"`` this is the scattering solution
    restricted to the annulus."""
    incident = incident or PlaneWave(k)
    if variant == "ExactNtD":
        return exact_scattering_series(k, a, R, M_exact, incident)
    return ExactSeries(variant, k, a, R, M_exact, incident,
                       outer=_outer_impedance(variant, k, R, M_exact))


def exact_scattering_series(k, a, R, M_exact=40, incident=None):
    """Sound-soft scattering: a_n = -i^n J_n(ka) exp(-i n t_d) / H_n(ka)."""
    incident = incident or PlaneWave(k)
    return ExactSeries("SoundSoftScattering", k, a, R, M_exact, incident)


def exact_gibc_series(k, a, R, beta, lam, M_exact=40, incident=None, outer="radiating"):
    """Constant-coefficient GIBC scattering (the total field satisfies the
    homogeneous surface relation on r = a)."""
    incident = incident or PlaneWave(k)
    gam = None if outer == "radiating" else _outer_impedance(outer, k, R, M_exact)
    return ExactSeries("GIBC", k, a, R, M_exact, incident, inner="gibc",
                       outer=gam, beta=complex(beta), lam=complex(lam))
