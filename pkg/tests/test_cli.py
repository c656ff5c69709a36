import json

import pytest

from qdiff.cli import main
from qdiff.config import ProblemConfig, telegraph_defaults


@pytest.fixture
def tele(tmp_path):
    p = tmp_path / "tele.json"
    telegraph_defaults().to_json(p)
    return p


def test_assemble_writes_exports(tele, tmp_path, capsys):
    out = tmp_path / "sys"
    assert main(["assemble", "--config", str(tele), "--out", str(out)]) == 0
    text = (out / "matrix.txt").read_text().splitlines()
    assert text[0].startswith("%") and len(text[-1].split()) == 3
    assert (out / "rhs.txt").exists()


def test_spectra_json(tele, tmp_path):
    out = tmp_path / "rep.json"
    assert main(["spectra", "--config", str(tele), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["kappa"] >= 1 and rep["method"] == "DenseSVD"


def test_solve_csv(tele, tmp_path):
    out = tmp_path / "m.csv"
    assert main(["solve", "--config", str(tele), "--out", str(out)]) == 0
    assert out.read_text().startswith("step,time,node,u,v")


def test_hhl_dump(tele, tmp_path, capsys):
    out = tmp_path / "s.bin"
    assert main(["hhl", "--config", str(tele), "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["fidelity"] > 0.99
    assert out.read_bytes().split(b"\n", 1)[0].startswith(b"{")


def test_sweep_and_report(tmp_path, tele):
    out = tmp_path / "sw.json"
    assert main(["sweep", "--config", str(tele), "--vary", "epsilon", "--values", "1e-2,1e-4,1e-8",
                 "--format", "json", "--out", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 3
    fit = tmp_path / "fit.json"
    assert main(["report", "--input", str(out), "--x", "epsilon", "--y", "kappa", "--out", str(fit)]) == 0
    assert abs(json.loads(fit.read_text())["exponent"]) < 0.05


def test_validation_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"equation": "Heat", "scheme": "Theta", "theta": 0, "n_x": 4, "n_t": 1, "t_final": 1}))
    assert main(["solve", "--config", str(bad)]) == 1
    assert main(["solve", "--config", str(tmp_path / "missing.json")]) == 1
    assert main(["frobnicate"]) == 1


def test_numerical_exit_code(tmp_path):
    c = telegraph_defaults(scheme="Penalized", n_x=4, n_t=10, t_final=0.5)
    p = tmp_path / "c.json"
    c.to_json(p)
    import qdiff.solvers as solvers

    orig = solvers.cg_solve

    def broken(*a, **k):
        raise solvers.NumericalError("forced")

    solvers.cg_solve = broken
    try:
        assert main(["solve", "--config", str(p)]) == 2
    finally:
        solvers.cg_solve = orig


def test_threads_env(monkeypatch):
    from qdiff.bench import max_workers

    monkeypatch.setenv("QDIFF_THREADS", "3")
    assert max_workers() == 3
