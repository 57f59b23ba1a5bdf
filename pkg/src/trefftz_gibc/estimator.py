"""scikit-learn style front end.

``fit`` assembles and solves the discrete problem described by the
hyper-parameters; ``predict`` evaluates the recovered scalar field
u_h = -div v_h / k^2 at query points.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .assembly import DirichletCondition, FluxParams, GibcCondition, assemble_system
from .basis import PlaneWaveBasis
from .boundary import Constant, ModalBoundaryOperator, TwoPiece, gibc_build_fem, gibc_build_trig
from .config import RunConfig
from .exact import PlaneWave, exact_abc_series, exact_gibc_series, exact_scattering_series
from .mesh import build_annular_mesh
from .solve import solve

__all__ = ["TrefftzScatteringSolver", "build_discretization", "reference_series"]

_CONFIG_KEYS = (
    "k", "a", "R", "p", "h", "n_theta", "n_r", "kind", "M", "mode", "beta_kind", "beta",
    "beta2", "lam", "lam2", "split0", "split1", "representation", "H", "P", "M_gamma",
    "alpha1", "alpha2", "delta", "tau", "tau_d", "incident_angle", "amplitude", "M_exact",
)


def _coefficients(cfg):
    if cfg.beta_kind == "constant":
        return Constant(cfg.beta), Constant(cfg.lam)
    split = (cfg.split0, cfg.split1)
    return TwoPiece(cfg.beta, cfg.beta2, split), TwoPiece(cfg.lam, cfg.lam2, split)


def build_discretization(cfg, h=None, kind=None):
    """Mesh, basis, boundary operators and assembled system for a config."""
    kind = kind or cfg.kind
    n_theta, n_r = cfg.grid(h)
    mesh = build_annular_mesh(cfg.a, cfg.R, n_theta, n_r)
    basis = PlaneWaveBasis(cfg.k, cfg.p, mesh.centroids)
    incident = PlaneWave(cfg.k, cfg.incident_angle, cfg.amplitude)
    sigma = ModalBoundaryOperator.from_kind(kind, cfg.k, cfg.R, cfg.M)
    if cfg.mode == "dirichlet":
        cond = DirichletCondition(lambda x: -incident.value(x))
    else:
        beta, lam = _coefficients(cfg)
        if cfg.representation == "fem":
            op = gibc_build_fem(cfg.a, beta, lam, cfg.H, cfg.P)
        else:
            op = gibc_build_trig(cfg.a, beta, lam, cfg.M_gamma)
        cond = GibcCondition(op, incident if cfg.amplitude != 0 else None)
    params = FluxParams(cfg.alpha1, cfg.alpha2, cfg.delta, cfg.tau, cfg.tau_d)
    system = assemble_system(mesh, basis, params, sigma, cond)
    return system


def reference_series(cfg, which="variant", kind=None):
    """Exact series for the per-variant truncated problem (``"variant"``) or
    the unbounded scattering problem (``"scattering"``); ``None`` when no
    closed form exists (non-constant impedance coefficients)."""
    kind = kind or cfg.kind
    incident = PlaneWave(cfg.k, cfg.incident_angle, cfg.amplitude)
    if cfg.mode == "dirichlet":
        if which == "variant":
            return exact_abc_series(kind, cfg.k, cfg.a, cfg.R, cfg.M_exact, incident)
        return exact_scattering_series(cfg.k, cfg.a, cfg.R, cfg.M_exact, incident)
    if cfg.beta_kind != "constant":
        return None
    outer = kind if which == "variant" else "radiating"
    return exact_gibc_series(cfg.k, cfg.a, cfg.R, cfg.beta, cfg.lam, cfg.M_exact, incident, outer)


class TrefftzScatteringSolver(BaseEstimator):
    """Plane-wave Trefftz DG solver for scattering by a circular obstacle.

    Hyper-parameters mirror the fields of :class:`RunConfig`.  ``X`` passed
    to ``fit`` is ignored (the problem is fully specified by the
    parameters); it is accepted for pipeline compatibility.
    """

    def __init__(self, k=8.0, a=0.5, R=1.0, p=7, h=0.1, n_theta=0, n_r=0, kind="ABC3", M=13,
                 mode="dirichlet", beta_kind="constant", beta=1 - 0.5j, beta2=1 - 0.5j,
                 lam=1j, lam2=1j, split0=0.0, split1=np.pi, representation="fem",
                 H=2 * np.pi * 0.5 / 128, P=1, M_gamma=40, alpha1=0.5, alpha2=0.5,
                 delta=0.5, tau=0.5, tau_d=0.5, incident_angle=0.0, amplitude=1.0,
                 M_exact=40):
        self.k = k
        self.a = a
        self.R = R
        self.p = p
        self.h = h
        self.n_theta = n_theta
        self.n_r = n_r
        self.kind = kind
        self.M = M
        self.mode = mode
        self.beta_kind = beta_kind
        self.beta = beta
        self.beta2 = beta2
        self.lam = lam
        self.lam2 = lam2
        self.split0 = split0
        self.split1 = split1
        self.representation = representation
        self.H = H
        self.P = P
        self.M_gamma = M_gamma
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.delta = delta
        self.tau = tau
        self.tau_d = tau_d
        self.incident_angle = incident_angle
        self.amplitude = amplitude
        self.M_exact = M_exact

    @classmethod
    def from_config(cls, cfg):
        return cls(**{key: getattr(cfg, key) for key in _CONFIG_KEYS})

    def to_config(self, **extra):
        params = {key: getattr(self, key) for key in _CONFIG_KEYS}
        params["amplitude"] = complex(params["amplitude"])
        for key in ("beta", "beta2", "lam", "lam2"):
            params[key] = complex(params[key])
        params.update(extra)
        return RunConfig(**params)

    def fit(self, X=None, y=None):
        cfg = self.to_config()
        self.config_ = cfg
        self.system_ = build_discretization(cfg)
        self.solution_ = solve(self.system_)
        self.n_dofs_ = self.system_.n_dofs
        self.residual_ = self.solution_.residual
        self.coef_ = self.solution_.coeffs
        return self

    def _points(self, X):
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError(f"expected points with 2 columns, got {X.shape[1]}")
        return X

    def predict(self, X):
        """u_h at the rows of X (points inside the annulus)."""
        check_is_fitted(self, "solution_")
        return self.solution_.evaluate(self._points(X))[0]

    def predict_gradient(self, X):
        """v_h = grad u_h at the rows of X."""
        check_is_fitted(self, "solution_")
        return self.solution_.evaluate(self._points(X))[1]

    def score(self, X, y):
        """Negative relative l2 discrepancy between u_h(X) and y."""
        y = np.asarray(y)
        uh = self.predict(X)
        return -float(np.linalg.norm(uh - y) / np.linalg.norm(y))

    def reference(self, which="variant"):
        return reference_series(self.to_config(), which)
