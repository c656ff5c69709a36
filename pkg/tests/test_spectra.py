import math

import numpy as np
import pytest
import scipy.sparse as sp

from qdiff import assembler as asm
from qdiff.spectra import (HypothesisError, explicit_symbol_norms, extreme_singular_values, fourier_symbol,
                           gershgorin_eigen_bounds, gershgorin_singular_bounds, imex_sharp_sigma_lower,
                           interval_union_contains, singular_values_dense, spectral_report, theorem_bounds)

from conftest import heat_config, ode_config, telegraph

GOLDEN = (1 + math.sqrt(5)) / 2


def test_dense_singular_values():
    assert np.allclose(singular_values_dense(np.diag([2.0, 3.0])), [3, 2])
    assert np.allclose(singular_values_dense(np.array([[1.0, 0.0], [-1.0, 1.0]])), [GOLDEN, GOLDEN - 1])


def test_iterative_matches_dense():
    assert np.allclose(extreme_singular_values(np.diag([1.0, 5.0])), (1, 5))
    L = asm.ode_system(ode_config(theta=0.5, tau=0.1, n_t=64)).L
    sv = singular_values_dense(L)
    lo, hi = extreme_singular_values(L, tol=1e-12)
    assert lo == pytest.approx(sv[-1], rel=1e-8) and hi == pytest.approx(sv[0], rel=1e-8)


def test_iterative_eps_independence():
    a = extreme_singular_values(asm.assemble(telegraph(epsilon=1e-8)).L)
    b = extreme_singular_values(asm.assemble(telegraph(epsilon=1e-4)).L)
    assert np.allclose(a, b, rtol=5e-3)


def test_gershgorin_eigen_examples():
    # H^2 = 4 I, so the squared discs pin |lambda| = 2 exactly
    assert gershgorin_eigen_bounds(np.array([[0.0, 2.0], [2.0, 0.0]])) == pytest.approx((2.0, 2.0))
    assert gershgorin_eigen_bounds(np.diag([-3.0, 1.0, 2.0])) == pytest.approx((1.0, 3.0))
    H = asm.hermitian_dilation(asm.ode_system(ode_config(theta=0.0, tau=0.1, n_t=4)).L)
    ev = np.abs(np.linalg.eigvalsh(H.toarray()))
    lo, hi = gershgorin_eigen_bounds(H)
    assert lo <= ev.min() + 1e-12 and ev.max() <= hi + 1e-12


def test_gershgorin_singular_examples():
    iv = gershgorin_singular_bounds(np.array([[2.0, 1.0], [0.0, 3.0]]))
    assert iv == [[1.0, 3.0], [2.0, 4.0]]
    assert np.all(interval_union_contains(iv, singular_values_dense(np.array([[2.0, 1.0], [0.0, 3.0]]))))
    assert gershgorin_singular_bounds(np.eye(3)) == [[1.0, 1.0]] * 3


def test_theorem_bound_examples():
    lo, hi = theorem_bounds("PreconditionedIMEX", tau=0.01, h=0.1, eps=0.0)
    assert lo == pytest.approx(0.00125) and hi == pytest.approx(2.1)
    assert theorem_bounds("Penalized", tau=0.1, h=0.5, eps=0.0) == pytest.approx((0.1 / 3, 4))
    # beta = 0.4, tau/h^2 = 4: alpha = 2.5e-7 * (2.08 + 10 + 0.3328 + 0.04)
    lo, hi = theorem_bounds("RelaxationRescaled", tau=0.04, h=0.1, eps=1e-8)
    assert lo == pytest.approx(0.01 - 3.1132e-6, abs=1e-10) and hi == pytest.approx(5 + 3.1132e-6, abs=1e-10)
    with pytest.raises(HypothesisError):
        theorem_bounds("RelaxationRescaled", tau=0.05, h=0.1, eps=1e-8)
    with pytest.raises(HypothesisError):
        theorem_bounds("Penalized", tau=0.1, h=0.1, eps=0.0)


def test_sharp_lower_examples():
    assert imex_sharp_sigma_lower(0.01, 0.1) == pytest.approx(0.0049623, abs=1e-7)
    assert imex_sharp_sigma_lower(0.0, 0.0) == 0.0
    v = imex_sharp_sigma_lower(0.0025, 0.05)
    assert v == pytest.approx(1 - math.sqrt(0.9975**2 + 0.0025), rel=1e-12)
    assert v == pytest.approx(0.0012477, abs=1e-7) and v / 0.0025 == pytest.approx(0.5, abs=2e-3)


def test_explicit_symbol_examples():
    assert np.allclose(fourier_symbol("ExplicitMultiscale", a=0.0, c_p=0.3, delta=0.5), [[1, 0], [0, 0.85]])
    S = fourier_symbol("ExplicitMultiscale", a=1.0, c_p=0.2, delta=0.5)
    assert np.allclose(S, np.diag([0.6, 0.5]))
    assert explicit_symbol_norms(1.0, 0.2, 0.5) == pytest.approx(0.6)


def test_penalized_symbol_eps_zero():
    S = fourier_symbol("Penalized", k=0.0, tau=0.05, h=0.1, eps=0.0)
    assert S[0, 1] == 0 and S[1, 0] == 0 and abs(S[0, 0]) <= 1


def test_spectral_report_fields():
    rep = spectral_report(asm.assemble(heat_config(theta=0.5, n_x=6)).L)
    assert rep.kappa >= 1 and rep.sigma_min <= rep.sigma_max
    sv = singular_values_dense(asm.assemble(heat_config(theta=0.5, n_x=6)).L)
    assert np.all(interval_union_contains(rep.gershgorin_intervals, sv))
    d = rep.to_dict()
    assert d["method"] == "DenseSVD"


def test_dense_cap_enforced():
    with pytest.raises(ValueError):
        singular_values_dense(sp.identity(10), cap=5)
