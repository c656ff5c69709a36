"""Parameter sweeps, log-log scaling fits and report emission."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import assembler as asm
from . import solvers
from .config import ConfigError, Equation, ProblemConfig, Scheme, apply_step_policy, telegraph_defaults, validate_config
from .sparse import SparseMatrix
from .spectra import DENSE_CAP, SpectralReport, spectral_report

DEFAULT_DELTA = 1e-2
ITERATIVE_TOL = 1e-6


@dataclass
class ComplexityRecord:
    config: dict
    classical_ops: int | None
    kappa: float | None
    sigma_min: float | None
    sigma_max: float | None
    sparsity: int | None
    q_estimate: float | None
    delta: float
    epsilon: float
    wall_time_ms: float
    method: str | None = None
    cg_tol: float | None = None
    extra: dict = field(default_factory=dict)

    def metrics(self, timing: bool = False) -> dict:
        out = {
            "classical_ops": self.classical_ops,
            "kappa": self.kappa,
            "sigma_min": self.sigma_min,
            "sigma_max": self.sigma_max,
            "sparsity": self.sparsity,
            "q_estimate": self.q_estimate,
            "delta": self.delta,
            "method": self.method,
            "cg_tol": self.cg_tol,
        }
        if timing:
            out["wall_time_ms"] = self.wall_time_ms
        out.update(self.extra)
        return out

    def flat(self, timing: bool = False) -> dict:
        """Config fields first, then metrics, each group sorted by name."""
        cfg = {k: self.config[k] for k in sorted(self.config)}
        met = self.metrics(timing)
        row = dict(cfg)
        for k in sorted(met):
            row[k if k not in cfg else f"metric_{k}"] = met[k]
        return row


@dataclass
class ScalingFit:
    x_name: str
    y_name: str
    points: list
    exponent: float
    intercept: float
    r_squared: float

    def to_dict(self) -> dict:
        return {"x_name": self.x_name, "y_name": self.y_name, "points": [list(p) for p in self.points],
                "exponent": self.exponent, "intercept": self.intercept, "r_squared": self.r_squared}


def fit_scaling_exponent(points, x_name: str = "x", y_name: str = "y") -> ScalingFit:
    """Ordinary least squares slope of log y against log x."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise ValueError("need at least three points")
    if any(x <= 0 or y <= 0 or not math.isfinite(x) or not math.isfinite(y) for x, y in pts):
        raise ValueError("scaling fit needs positive finite data")
    lx = np.log([p[0] for p in pts])
    ly = np.log([p[1] for p in pts])
    if np.ptp(ly) == 0:
        return ScalingFit(x_name, y_name, pts, 0.0, float(ly[0]), 1.0)
    res = stats.linregress(lx, ly)
    return ScalingFit(x_name, y_name, pts, float(res.slope), float(res.intercept), float(res.rvalue**2))


def query_complexity_estimate(report, delta: float, kappa: float | None = None) -> float:
    """s * kappa * ln(1/delta); ``report`` is a SpectralReport or a sparsity integer."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if isinstance(report, SpectralReport):
        s, k = report.sparsity, report.kappa
    else:
        s, k = report, kappa
    if k is None or not math.isfinite(k):
        raise ValueError("kappa must be finite")
    return s * k * math.log(1 / delta)


def dilation_sparsity(L) -> int:
    M = SparseMatrix(L) if not isinstance(L, SparseMatrix) else L
    return max(M.sparsity(), M.transpose().sparsity())


def max_workers() -> int:
    raw = os.environ.get("QDIFF_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"QDIFF_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def measure(config: ProblemConfig, delta: float = DEFAULT_DELTA, dense_cap: int = DENSE_CAP,
            ops: bool = True, spectra: bool = True, cg_tol: float = solvers.CG_TOL_BENCH,
            force: bool = False, extra: dict | None = None) -> ComplexityRecord:
    """One record: counted march cost and the spectrum of the assembled matrix."""
    problems = validate_config(config)
    if problems:
        raise ConfigError("; ".join(problems))
    t0 = time.perf_counter()
    n_ops = None
    if ops:
        kw = {}
        if config.equation == Equation.HEAT or config.scheme == Scheme.PENALIZED:
            kw["tol"] = cg_tol
        if config.scheme == Scheme.EXPLICIT_MULTISCALE:
            kw["force"] = force
        n_ops = solvers.march(config, **kw).ops.total()
    smin = smax = kappa = q = s = method = None
    if spectra:
        system = asm.assemble(config)
        rep = spectral_report(system.L, dense_cap=dense_cap, tol=ITERATIVE_TOL, intervals=False)
        smin, smax, kappa = rep.sigma_min, rep.sigma_max, rep.kappa
        s = dilation_sparsity(system.L)
        method = rep.method.value
        if math.isfinite(kappa):
            q = query_complexity_estimate(s, delta, kappa)
    ms = (time.perf_counter() - t0) * 1e3
    return ComplexityRecord(
        config=config.to_dict(), classical_ops=n_ops, kappa=kappa, sigma_min=smin, sigma_max=smax,
        sparsity=s, q_estimate=q, delta=delta, epsilon=config.epsilon, wall_time_ms=ms,
        method=method, cg_tol=cg_tol if ops else None, extra=dict(extra or {}),
    )


def run_parallel(fn, items, workers: int | None = None) -> list:
    """Map ``fn`` over ``items``; results come back in input order."""
    items = list(items)
    workers = min(workers or max_workers(), max(1, len(items)))
    if workers == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def epsilon_configs(scheme, eps_values, tau: float = 0.05, h: float = 0.5, base: ProblemConfig | None = None):
    base = base or telegraph_defaults()
    length = base.domain_hi - base.domain_lo
    n_x = round(length / h)
    n_t = round(base.t_final / tau)
    if not math.isclose(n_x * h, length) or not math.isclose(n_t * tau, base.t_final):
        raise ConfigError("tau and h must divide the horizon and the domain")
    return [base.replace(scheme=Scheme(scheme), epsilon=float(e), n_x=n_x, n_t=n_t) for e in eps_values]


def sweep_epsilon(scheme, eps_values, tau: float = 0.05, h: float = 0.5, base: ProblemConfig | None = None,
                  ops: bool = True, **kw) -> list[ComplexityRecord]:
    eps_values = list(eps_values)
    if len(eps_values) < 2:
        raise ValueError("an epsilon sweep needs at least two values")
    cfgs = epsilon_configs(scheme, eps_values, tau, h, base)
    return run_parallel(lambda c: measure(c, ops=ops, **kw), cfgs)


def resolution_configs(base: ProblemConfig, nx_values, policy: bool = True):
    out = []
    for n in nx_values:
        c = base.replace(n_x=int(n))
        out.append(apply_step_policy(c) if policy else c)
    return out


def sweep_resolution(base: ProblemConfig, nx_values, policy: bool = True, ops: bool = True,
                     **kw) -> list[ComplexityRecord]:
    nx_values = list(nx_values)
    if len(nx_values) < 3:
        raise ValueError("a resolution sweep needs at least three values")
    cfgs = resolution_configs(base, nx_values, policy)
    return run_parallel(lambda c: measure(c, ops=ops, **kw), cfgs)


def fit_records(records, x_key: str, y_key: str) -> ScalingFit:
    pts = []
    for r in records:
        row = r.flat() if isinstance(r, ComplexityRecord) else r
        pts.append((row[x_key], row[y_key]))
    return fit_scaling_exponent(pts, x_key, y_key)


def render_report(records, fmt: str = "csv", timing: bool = False) -> str:
    records = list(records)
    if not records:
        raise ValueError("no records to emit")
    rows = [r.flat(timing) if isinstance(r, ComplexityRecord) else dict(r) for r in records]
    cols = list(rows[0])
    for row in rows[1:]:
        for k in row:
            if k not in cols:
                cols.append(k)
    if fmt == "json":
        return json.dumps([{k: row.get(k) for k in cols} for row in rows], indent=2) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow(["" if row.get(k) is None else _cell(row.get(k)) for k in cols])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


def emit_report(records, fmt: str = "csv", path=None, timing: bool = False) -> str:
    """Write (or return) a flat report; wall times are left out unless ``timing``."""
    text = render_report(records, fmt, timing)
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def sharp_bound_rows(h_values=(0.05, 0.0625, 0.075, 0.0875, 0.1), eps: float = 1e-8, n_t: int = 20,
                     dense_cap: int = DENSE_CAP) -> list[dict]:
    """sigma_L against the dense sigma_min of the preconditioned IMEX matrix, tau = h^2.

    The grid spans [0, n_x h] with n_x = round(1/h), i.e. an (almost) unit interval.
    """
    from .spectra import imex_sharp_sigma_lower, singular_values_dense

    def one(h):
        n_x = int(round(1 / h))
        tau = h * h
        cfg = telegraph_defaults(scheme=Scheme.PRECONDITIONED_IMEX, n_x=n_x, n_t=n_t, t_final=tau * n_t,
                                 epsilon=eps, domain_lo=0.0, domain_hi=n_x * h)
        sv = singular_values_dense(asm.assemble(cfg).L, cap=dense_cap)
        return {"h": h, "sigma_L": imex_sharp_sigma_lower(tau, tau / h), "sigma_min": float(sv[-1]),
                "sigma_max": float(sv[0]), "tau": tau, "n_x": n_x, "n_t": n_t}

    return run_parallel(one, list(h_values))
