"""scikit-learn style wrappers around the marchers, the spectrum tools and HHL."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import assembler as asm
from . import solvers
from .config import ConfigError, ProblemConfig, validate_config
from .hhl import choose_evolution_time, hhl_solve
from .spectra import DENSE_CAP, spectral_report


def _as_config(X) -> ProblemConfig:
    if isinstance(X, ProblemConfig):
        cfg = X
    elif isinstance(X, dict):
        cfg = ProblemConfig.from_dict(X)
    else:
        raise TypeError(f"expected a ProblemConfig or dict, got {type(X).__name__}")
    problems = validate_config(cfg)
    if problems:
        raise ConfigError("; ".join(problems))
    return cfg


def _as_matrix(L):
    if sp.issparse(L):
        return sp.csr_matrix(L, dtype=float)
    if hasattr(L, "csr"):
        return L.csr
    return sp.csr_matrix(check_array(L, dtype=float))


class SpaceTimeSolver(BaseEstimator):
    """Solve one evolution problem by marching or by the all-at-once direct solve.

    ``fit`` takes a ProblemConfig (or its dict form); ``predict`` returns the
    stacked solution vector, ``transform`` the per-step history.
    """

    def __init__(self, method: str = "march", cg_tol: float = solvers.CG_TOL_ORACLE, force: bool = False):
        self.method = method
        self.cg_tol = cg_tol
        self.force = force

    def fit(self, X, y=None):
        cfg = _as_config(X)
        if self.method not in ("march", "direct"):
            raise ValueError(f"method must be 'march' or 'direct', got {self.method!r}")
        self.config_ = cfg
        self.system_ = asm.assemble(cfg)
        if self.method == "march":
            kw = {}
            if cfg.equation.value == "Heat" or cfg.scheme.value == "Penalized":
                kw["tol"] = self.cg_tol
            if cfg.scheme.value == "ExplicitMultiscale":
                kw["force"] = self.force
            self.result_ = solvers.march(cfg, **kw)
            self.solution_ = solvers.stack_solution(self.system_, self.result_)
        else:
            self.result_ = None
            self.solution_ = solvers.solve_spacetime_direct(self.system_)
        self.residual_ = self.system_.residual(self.solution_)
        return self

    def predict(self, X=None):
        check_is_fitted(self, "solution_")
        return self.solution_.copy()

    def transform(self, X=None):
        """Rows are time steps 1..N_t; fields side by side in unscaled variables."""
        check_is_fitted(self, "solution_")
        parts = self.system_.unscale(self.solution_)
        k = self.system_.block_size
        return np.hstack([p.reshape(-1, k) for p in parts])

    def score(self, X=None, y=None):
        """Negative residual max-norm, so larger is better."""
        check_is_fitted(self, "residual_")
        return -self.residual_


class SpectrumEstimator(BaseEstimator):
    """Extreme singular values and condition number of a sparse matrix."""

    def __init__(self, dense_cap: int = DENSE_CAP, tol: float = 1e-8, intervals: bool = False):
        self.dense_cap = dense_cap
        self.tol = tol
        self.intervals = intervals

    def fit(self, X, y=None):
        M = _as_matrix(X)
        if M.shape[0] != M.shape[1]:
            raise ValueError("matrix must be square")
        self.report_ = spectral_report(M, dense_cap=self.dense_cap, tol=self.tol, intervals=self.intervals)
        self.sigma_min_ = self.report_.sigma_min
        self.sigma_max_ = self.report_.sigma_max
        self.kappa_ = self.report_.kappa
        self.n_features_in_ = M.shape[1]
        return self

    def transform(self, X=None):
        check_is_fitted(self, "report_")
        return np.array([[self.sigma_min_, self.sigma_max_, self.kappa_]])

    def fit_transform(self, X, y=None):
        return self.fit(X).transform()


class HHLSolver(BaseEstimator):
    """Ideal HHL on a symmetric matrix; ``predict`` returns the normalized solution."""

    def __init__(self, n_t: int = 10, lambda_max: float | None = None, check_unitarity: bool = True):
        self.n_t = n_t
        self.lambda_max = lambda_max
        self.check_unitarity = check_unitarity

    def fit(self, X, y):
        H = check_array(X.toarray() if sp.issparse(X) else X, dtype=float)
        b = np.asarray(y, dtype=float).ravel()
        lam = self.lambda_max
        if lam is None:
            lam = float(np.max(np.abs(np.linalg.eigvalsh(H))))
        self.params_ = choose_evolution_time(lam, self.n_t)
        self.result_ = hhl_solve(H, b, self.params_, check=self.check_unitarity)
        self.n_features_in_ = H.shape[1]
        return self

    def predict(self, X=None):
        check_is_fitted(self, "result_")
        return self.result_.solution_direction

    def score(self, X=None, y=None):
        """Fidelity against the exact direction."""
        check_is_fitted(self, "result_")
        return self.result_.fidelity
