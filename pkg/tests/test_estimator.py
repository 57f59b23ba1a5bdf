import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from trefftz_gibc import RunConfig, TrefftzScatteringSolver
from trefftz_gibc.estimator import reference_series


@pytest.fixture(scope="module")
def fitted():
    return TrefftzScatteringSolver(h=0.2).fit()


def _points(n=50, seed=0):
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.5, 1.0, n)
    th = rng.uniform(0, 2 * np.pi, n)
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)


def test_params_interface():
    est = TrefftzScatteringSolver(k=4.0, kind="ABC1")
    p = est.get_params()
    assert p["k"] == 4.0 and p["kind"] == "ABC1"
    est2 = clone(est).set_params(h=0.3)
    assert est2.h == 0.3 and est.h == 0.1


def test_config_round_trip():
    cfg = RunConfig(k=5.0, mode="gibc", kind="ExactNtD")
    est = TrefftzScatteringSolver.from_config(cfg)
    assert est.to_config() == cfg


def test_fit_predict_against_reference(fitted):
    x = _points()
    ref = fitted.reference()
    u = fitted.predict(x)
    assert np.linalg.norm(u - ref(x)) < 1e-2 * np.linalg.norm(ref(x))
    v = fitted.predict_gradient(x)
    assert v.shape == (50, 2)
    assert -fitted.score(x, ref(x)) < 1e-2
    assert fitted.residual_ <= 1e-10
    assert fitted.n_dofs_ == len(fitted.coef_)


def test_gibc_fit():
    est = TrefftzScatteringSolver(h=0.2, mode="gibc", kind="ExactNtD", representation="trig").fit()
    ref = est.reference("variant")
    x = _points()
    assert np.linalg.norm(est.predict(x) - ref(x)) < 1e-2 * np.linalg.norm(ref(x))


def test_two_piece_has_no_reference():
    cfg = RunConfig(mode="gibc", beta_kind="two-constant piecewise", beta2=2 - 1j)
    assert reference_series(cfg) is None


def test_errors():
    with pytest.raises(NotFittedError):
        TrefftzScatteringSolver().predict(_points())
    est = TrefftzScatteringSolver(h=0.4).fit()
    with pytest.raises(ValueError):
        est.predict(np.zeros((3, 3)))
