"""Fast self-checks of the numerical identities the solver relies on."""

import math

import numpy as np

from .boundary import gibc_build_fem, gibc_build_trig, ntd_coefficients
from .estimator import build_discretization, reference_series
from .solve import solve
from .specfun import jy_table

__all__ = ["run_checks"]


def _wronskian():
    worst = 0.0
    for x in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 50.0):
        J, Y = jy_table(41, x)
        Jm1 = np.concatenate([[-J[1]], J[:-1]])
        Ym1 = np.concatenate([[-Y[1]], Y[:-1]])
        Jp = 0.5 * (Jm1[:41] - J[1:42])
        Yp = 0.5 * (Ym1[:41] - Y[1:42])
        ref = 2 / (math.pi * x)
        worst = max(worst, float(np.max(np.abs(J[:41] * Yp - Jp * Y[:41] - ref)) / ref))
    return worst <= 1e-10, f"max relative Wronskian defect {worst:.2e}"


def _ntd_signs(rng):
    g = ntd_coefficients(8.0, 1.0, 40)
    ok = bool(np.all(g.real < 0) and np.all(g.imag < 0))
    worst = -np.inf
    for _ in range(50):
        f = rng.normal(size=81) + 1j * rng.normal(size=81)
        worst = max(worst, float((2 * math.pi * np.sum(g * np.abs(f) ** 2)).real))
    return ok and worst < 0, f"max Re quadratic form {worst:.3e}"


def _gibc(rng):
    beta, lam = 1 - 0.5j, 1j
    worst_im, worst_adj = np.inf, 0.0
    for op in (gibc_build_fem(0.5, beta, lam, 2 * math.pi * 0.5 / 64), gibc_build_trig(0.5, beta, lam, 20)):
        for _ in range(20):
            b1 = rng.normal(size=op.n_basis) + 1j * rng.normal(size=op.n_basis)
            b2 = rng.normal(size=op.n_basis) + 1j * rng.normal(size=op.n_basis)
            c1 = op.solve(b1)
            # eta with moments b1 has coefficients M^{-1} b1
            e1 = np.linalg.solve(op.mass, b1)
            norm2 = float(np.vdot(e1, b1).real)
            worst_im = min(worst_im, float(np.vdot(b1, c1).imag) / norm2)
            lhs = np.vdot(b2, c1)
            rhs = np.vdot(op.solve_adjoint(b2), b1)
            worst_adj = max(worst_adj, abs(lhs - rhs) / max(abs(lhs), 1e-300))
    return worst_im >= -1e-10 and worst_adj <= 1e-12, f"min Im <G eta, eta>/|eta|^2 {worst_im:.2e}, adjoint defect {worst_adj:.2e}"


def _forms(cfg, rng):
    sysm = build_discretization(cfg.replace(h=0.2, n_theta=0, n_r=0))
    worst_a0, worst_b = 0.0, np.inf
    for _ in range(20):
        u = rng.normal(size=sysm.n_dofs) + 1j * rng.normal(size=sysm.n_dofs)
        nu = float(np.vdot(u, u).real)
        worst_a0 = max(worst_a0, abs(sysm.a0(u, u).imag) / nu)
        worst_b = min(worst_b, sysm.b(u, u).imag)
    return worst_a0 <= 1e-8 and worst_b >= 0, f"max |Im a0|/|u|^2 {worst_a0:.2e}, min Im b {worst_b:.3e}"


def _series(cfg):
    ser = reference_series(cfg.replace(mode="dirichlet", kind="ABC3"), "variant")
    worst = max(ser.mode_residual(n) for n in range(-ser.M, ser.M + 1))
    bres = ser.boundary_residual()
    return worst <= 1e-12 and bres <= 1e-8, f"mode residual {worst:.2e}, boundary residual {bres:.2e}"


def _solver(cfg, rng):
    sysm = build_discretization(cfg.replace(h=0.4, n_theta=0, n_r=0))
    x_star = rng.normal(size=sysm.n_dofs) + 1j * rng.normal(size=sysm.n_dofs)
    sysm.rhs = sysm.matrix @ x_star
    sol = solve(sysm)
    err = float(np.linalg.norm(sol.coeffs - x_star) / np.linalg.norm(x_star))
    return err <= 1e-9 and sol.residual <= 1e-10, f"manufactured recovery {err:.2e}, residual {sol.residual:.2e}"


def run_checks(cfg, seed=0):
    """Run the suite; returns a list of (name, passed, detail)."""
    rng = np.random.default_rng(seed)
    suite = [
        ("bessel wronskian", _wronskian),
        ("ntd signs", lambda: _ntd_signs(rng)),
        ("gibc sign and adjoint", lambda: _gibc(rng)),
        ("form identities", lambda: _forms(cfg, rng)),
        ("exact series", lambda: _series(cfg)),
        ("solver contract", lambda: _solver(cfg, rng)),
    ]
    out = []
    for name, fn in suite:
        ok, detail = fn()
        out.append((name, bool(ok), detail))
    return out
