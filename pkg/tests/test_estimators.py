import numpy as np
import pytest
from sklearn.base import clone

from qdiff import assembler as asm
from qdiff.config import ConfigError
from qdiff.estimators import HHLSolver, SpaceTimeSolver, SpectrumEstimator

from conftest import heat_config, telegraph


def test_solver_march_and_direct_agree():
    c = telegraph("Penalized", epsilon=1e-4)
    a = SpaceTimeSolver().fit(c)
    b = SpaceTimeSolver(method="direct").fit(c.to_dict())
    assert np.max(np.abs(a.predict() - b.predict())) < 1e-9
    assert a.transform().shape == (c.n_t, 2 * (c.n_x - 1))
    assert a.score() > -1e-8


def test_solver_params_and_clone():
    s = SpaceTimeSolver(method="direct", cg_tol=1e-10)
    assert s.get_params() == {"method": "direct", "cg_tol": 1e-10, "force": False}
    assert clone(s).get_params() == s.get_params()


def test_solver_validates():
    with pytest.raises(ConfigError):
        SpaceTimeSolver().fit(heat_config(theta=0.0, n_x=8, n_t=1, t_final=1.0))
    with pytest.raises(TypeError):
        SpaceTimeSolver().fit("not a config")


def test_spectrum_estimator():
    L = asm.assemble(heat_config(theta=0.5, n_x=6)).L
    est = SpectrumEstimator().fit(L)
    out = est.transform()
    assert out.shape == (1, 3) and out[0, 2] == pytest.approx(est.kappa_)
    with pytest.raises(ValueError):
        SpectrumEstimator().fit(np.ones((2, 3)))


def test_hhl_estimator():
    H = np.array([[2.0, 1.0], [1.0, 3.0]])
    est = HHLSolver(n_t=10).fit(H, [1.0, 0.0])
    x = np.linalg.solve(H, [1.0, 0.0])
    assert abs(est.predict() @ x) / np.linalg.norm(x) == pytest.approx(est.score())
    assert est.score() > 0.99
