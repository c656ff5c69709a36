import math

import pytest

from qdiff.bench import (ComplexityRecord, emit_report, fit_scaling_exponent, measure, query_complexity_estimate,
                         render_report, sweep_epsilon, sweep_resolution)
from qdiff.spectra import SpectralReport

from conftest import heat_config, ode_config


def test_fit_examples():
    f = fit_scaling_exponent([(1, 1), (2, 4), (4, 16)])
    assert f.exponent == pytest.approx(2.0) and f.r_squared == pytest.approx(1.0)
    assert fit_scaling_exponent([(1, 2), (2, 2), (4, 2)]).exponent == 0.0
    with pytest.raises(ValueError):
        fit_scaling_exponent([(1, 1), (2, 0), (3, 1)])
    with pytest.raises(ValueError):
        fit_scaling_exponent([(1, 1), (2, 2)])


def test_query_estimate():
    rep = SpectralReport(sigma_min=0.1, sigma_max=1.0, kappa=10.0, sparsity=2)
    assert query_complexity_estimate(rep, math.exp(-1)) == pytest.approx(20.0)
    with pytest.raises(ValueError):
        query_complexity_estimate(rep, 1.5)


def test_record_estimate_recomputes():
    r = measure(heat_config(theta=0.5, n_x=8))
    assert r.q_estimate == r.sparsity * r.kappa * math.log(1 / r.delta)


def test_single_eps_sweep_rejected():
    with pytest.raises(ValueError):
        sweep_epsilon("PreconditionedIMEX", [1e-2])


def test_eps_sweep_preconditioned_flat():
    recs = sweep_epsilon("PreconditionedIMEX", [1e-1, 1e-4, 1e-8], ops=False)
    k = [r.kappa for r in recs]
    assert max(k) / min(k) <= 2


def test_eps_sweep_unpreconditioned_grows():
    recs = sweep_epsilon("IMEX", [1e-2, 1e-4], ops=False)
    assert 30 <= recs[1].kappa / recs[0].kappa <= 300


def test_sweep_order_independent():
    a = sweep_epsilon("Penalized", [1e-2, 1e-4, 1e-8], ops=False)
    b = sweep_epsilon("Penalized", [1e-8, 1e-2, 1e-4], ops=False)
    assert [r.kappa for r in a] == [b[1].kappa, b[2].kappa, b[0].kappa]


def test_ode_kappa_under_bound():
    for n in (8, 16, 32):
        r = measure(ode_config(theta=0.0, tau=1 / n, n_t=n))
        tau = 1 / n
        assert r.kappa <= (2 + tau) / tau


def test_report_deterministic_and_ordered(tmp_path):
    recs = sweep_resolution(heat_config(theta=0.5, n_x=8), [6, 8, 10])
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_report(recs, "csv", a)
    emit_report(sweep_resolution(heat_config(theta=0.5, n_x=8), [6, 8, 10]), "csv", b)
    assert a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[0].split(",")
    assert header.index("a") < header.index("theta") < header.index("cg_tol") < header.index("sparsity")
    assert len(a.read_text().splitlines()) == 4
    one = render_report(recs[:1], "json")
    assert one.strip().startswith("[") and "wall_time_ms" not in one
