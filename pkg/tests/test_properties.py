import math
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qdiff import assembler as asm
from qdiff.bench import fit_scaling_exponent
from qdiff.hhl import fidelity
from qdiff.solvers import solve_spacetime_direct
from qdiff.sparse import SparseMatrix
from qdiff.spectra import (explicit_symbol_norms, gershgorin_singular_bounds, interval_union_contains,
                           singular_values_dense)

from conftest import ode_config

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: arrays(float, (n, n), elements=finite)))
def test_gershgorin_contains_singular_values(A):
    sv = singular_values_dense(A)
    assert np.all(interval_union_contains(gershgorin_singular_bounds(A), sv, rtol=1e-9))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: arrays(float, (n, n), elements=finite)))
def test_sparse_text_round_trip(A):
    M = SparseMatrix(A)
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "m.txt"
        M.save_text(p)
        assert SparseMatrix.load_text(p) == M
    assert np.array_equal(M.transpose().toarray(), A.T)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(0.01, 100.0))
def test_fit_recovers_power_law(k, c):
    xs = [2.0, 4.0, 8.0, 16.0]
    f = fit_scaling_exponent([(x, c * x**k) for x in xs])
    assert f.exponent == pytest.approx(k, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(arrays(float, 4, elements=finite), arrays(float, 4, elements=finite))
def test_fidelity_is_a_cosine(x, y):
    if np.linalg.norm(x) < 1e-6 or np.linalg.norm(y) < 1e-6:
        return
    f = fidelity(x, y)
    assert -1e-12 <= f <= 1 + 1e-12
    assert fidelity(x, 3.0 * x) == pytest.approx(1.0)


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 1), st.floats(1e-3, 1), st.data())
def test_explicit_symbol_contracts(a, delta, data):
    c_p = data.draw(st.floats(1 / math.sqrt(111), 2 / (2 + delta)))
    assert explicit_symbol_norms(a, c_p, delta) <= 1 + 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 5.0), st.sampled_from([0.0, 0.5, 1.0]), st.integers(2, 12))
def test_ode_system_solves_recurrence(a, theta, n_t):
    tau = 0.05
    s = asm.ode_system(ode_config(a=a, theta=theta, tau=tau, n_t=n_t))
    S = solve_spacetime_direct(s)
    u = ode_config().u0
    for n in range(n_t):
        u = u * (1 - (1 - theta) * a * tau) / (1 + theta * a * tau)
        assert S[n] == pytest.approx(u, rel=1e-10, abs=1e-14)
