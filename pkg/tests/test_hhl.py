import math

import numpy as np
import pytest

from qdiff import assembler as asm
from qdiff.hhl import (HHLError, HHLParams, QuantumState, choose_evolution_time, decay_factor_g, fidelity,
                       hhl_solve, observable_expectation, required_samples, solve_dilated)
from qdiff.solvers import MarchResult, OpCounter, march

from conftest import ode_config, telegraph


def exact_params(n_t, unit):
    # eigenvalue k*unit sits exactly on clock value k
    t0 = 2 * math.pi / (2**n_t * unit)
    return HHLParams(n_t=n_t, t_0=t0, C_t=1.0, p=0, lambda_max_estimate=1.0)


def test_evolution_time_example():
    p = choose_evolution_time(3.0, 10)
    assert p.p == 2 and p.C_t == 100 and p.t_0 == pytest.approx(0.6136, abs=1e-4)
    assert 3.0 * p.t_0 <= math.pi
    q = choose_evolution_time(2.0**9, 10)
    assert q.p == 0 and q.C_t == 1


def test_evolution_time_rejects_bad_input():
    with pytest.raises(HHLError):
        choose_evolution_time(0.0, 10)
    with pytest.raises(HHLError):
        choose_evolution_time(1.0, 1)


def test_exact_phase_two_by_two():
    H = np.array([[0.0, 2.0], [2.0, 0.0]])
    r = hhl_solve(H, [1.0, 0.0], exact_params(3, 1.0))
    assert r.fidelity >= 1 - 1e-9
    assert np.allclose(np.abs(r.solution_direction), [0, 1], atol=1e-9)


def test_exact_phase_four_by_four(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    H = Q @ np.diag([1.0, -2.0, 3.0, 5.0]) @ Q.T
    H = (H + H.T) / 2
    r = hhl_solve(H, rng.standard_normal(4), exact_params(4, 1.0))
    assert r.fidelity >= 1 - 1e-9


def test_identity_is_trivial():
    r = hhl_solve(np.eye(4), [1.0, 2.0, 3.0, 4.0], choose_evolution_time(1.0, 10))
    assert r.success_probability == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(r.solution_direction, np.array([1, 2, 3, 4]) / math.sqrt(30))


def test_padded_rows_zero():
    H = np.diag([1.0, 2.0, 3.0])
    r = hhl_solve(H, [1.0, 1.0, 1.0], exact_params(3, 1.0))
    t = r.output_state.tensor()
    assert np.all(t[:, 3:, :] == 0)


def test_unitarity_accounting_recorded():
    H = np.array([[2.0, 1.0], [1.0, 3.0]])
    r = hhl_solve(H, [1.0, 0.5], choose_evolution_time(4.0, 8))
    c = r.checks
    assert abs(c["norm_after_qpe"] - 1) <= 1e-12 and abs(c["norm_after_uncompute"] - 1) <= 1e-12
    assert abs(c["kept_mass"] + c["discarded_mass"] - 1) <= 1e-12
    assert c["kept_mass"] == pytest.approx(r.success_probability, abs=1e-12)


def test_contract_violations():
    with pytest.raises(HHLError):
        hhl_solve(np.array([[1.0, 2.0], [0.0, 1.0]]), [1.0, 0.0], choose_evolution_time(3.0, 6))
    with pytest.raises(HHLError):
        hhl_solve(np.eye(2), [0.0, 0.0], choose_evolution_time(1.0, 6))
    with pytest.raises(HHLError):
        hhl_solve(np.eye(2048), np.ones(2048), choose_evolution_time(1.0, 6))
    # an eigenvalue far below the clock resolution decodes to zero
    with pytest.raises(HHLError):
        hhl_solve(np.diag([1e-6, 1.0]), [1.0, 1.0], choose_evolution_time(1.0, 4))


def test_fidelity_basics():
    s = QuantumState.from_system_vector([1.0, 0.0])
    assert fidelity(s, [2.0, 0.0]) == pytest.approx(1.0)
    assert fidelity(s, [0.0, 1.0]) == pytest.approx(0.0)
    x = np.array([0.6, 0.8])
    y = np.array([0.8, 0.6])
    f = fidelity(x, y)
    assert np.linalg.norm(x - y) == pytest.approx(math.sqrt(2 - 2 * f))
    with pytest.raises(HHLError):
        fidelity(s, [0.0, 0.0])


def test_observable_and_samples():
    s = QuantumState.from_system_vector(np.ones(4))
    val, samples = observable_expectation(s, site=1, step=0, block_size=2)
    assert val == pytest.approx(0.25)
    assert samples(1.0, 0.1, 0.9) == 1000
    with pytest.raises(IndexError):
        observable_expectation(s, site=2, step=0, block_size=2)


def test_padded_normalization_is_constant():
    from qdiff.hhl import history_normalization

    s = asm.ode_system(ode_config(n_t=4, tau=0.1))
    p = asm.pad_history_state(s)
    assert history_normalization(s, False, 1.0) == 4
    assert history_normalization(p, True, 1.0) == 2


def test_padded_final_copies_mass():
    H = asm.ode_system(ode_config(theta=0.0, a=1e-12, tau=0.5, n_t=4))
    p = asm.pad_history_state(H)
    from qdiff.solvers import solve_spacetime_direct
    S = solve_spacetime_direct(p)
    assert np.sum(S[4:] ** 2) / np.sum(S**2) == pytest.approx(0.5, abs=1e-9)


def test_decay_factor():
    const = MarchResult(np.ones((5, 2)), np.arange(5.0), OpCounter())
    assert decay_factor_g(const) == 1.0
    geo = MarchResult((0.5 ** np.arange(5))[:, None], np.arange(5.0), OpCounter())
    assert decay_factor_g(geo) == pytest.approx(16.0)


def test_decay_factor_manufactured():
    c = telegraph("PreconditionedIMEX", epsilon=1e-8, n_x=40, n_t=1600, t_final=1.0)
    g = decay_factor_g(march(c))
    assert g == pytest.approx(math.e, rel=0.05)


def test_state_dump_round_trip(tmp_path):
    r = hhl_solve(np.array([[0.0, 2.0], [2.0, 0.0]]), [1.0, 0.0], exact_params(3, 1.0))
    p = tmp_path / "s.bin"
    r.output_state.dump(p)
    raw = p.read_bytes()
    head = raw[: raw.index(b"\n")]
    assert b'"n_t": 3' in head
    back = QuantumState.load(p)
    assert np.array_equal(back.amplitudes, r.output_state.amplitudes)


@pytest.mark.parametrize("eps", [1e-1, 1e-4])
def test_monotone_precision_on_imex_problem(eps):
    s = asm.assemble(telegraph("PreconditionedIMEX", epsilon=eps))
    fids = []
    for n in (4, 6, 8, 10):
        try:
            fids.append(solve_dilated(s, n_t=n).fidelity)
        except HHLError:
            # the clock is too coarse: lambda_min decodes to zero, so refuse
            assert not fids
    assert fids and fids[-1] >= 0.99
    drops = [a - b for a, b in zip(fids, fids[1:]) if b < a]
    assert len(drops) <= 1 and all(d <= 1e-3 for d in drops)


def test_coarse_clock_is_rejected():
    s = asm.assemble(telegraph("PreconditionedIMEX", epsilon=1e-4))
    with pytest.raises(HHLError, match="zero clock"):
        solve_dilated(s, n_t=4)
