"""Singular-value oracles, Gershgorin-type bounds, closed-form theorem bounds and Fourier symbols."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .sparse import SparseMatrix, as_csr

DENSE_CAP = 4096


class Method(str, enum.Enum):
    DENSE_SVD = "DenseSVD"
    ITERATIVE = "Iterative"
    BOUNDS_ONLY = "BoundsOnly"


class HypothesisError(ValueError):
    """Parameters outside the hypotheses of the requested bound."""


@dataclass
class SpectralReport:
    sigma_min: float
    sigma_max: float
    kappa: float
    sparsity: int
    gershgorin_intervals: list = field(default_factory=list)
    theorem_lower: float | None = None
    theorem_upper: float | None = None
    method: Method = Method.DENSE_SVD
    lower_bound_positive: bool | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["method"] = Method(self.method).value
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


# ---------------------------------------------------------------- oracles


def singular_values_dense(L, cap: int = DENSE_CAP) -> np.ndarray:
    """All singular values, descending, from LAPACK's deterministic SVD."""
    M = as_csr(L)
    if max(M.shape) > cap:
        raise ValueError(f"order {max(M.shape)} exceeds the dense cap {cap}")
    return sla.svdvals(M.toarray(), check_finite=True)


def _rayleigh_power(apply, n, tol, maxiter, seed=42):
    """Largest eigenvalue of a symmetric PSD operator; all-ones start, one seeded restart."""
    starts = [np.ones(n)]
    rng = np.random.default_rng(seed)
    starts.append(rng.standard_normal(n))
    for x in starts:
        x = x / np.linalg.norm(x)
        lam = 0.0
        for _ in range(maxiter):
            y = apply(x)
            lam_new = float(x @ y)
            ny = np.linalg.norm(y)
            if ny == 0:
                break
            x = y / ny
            if lam_new > 0 and abs(lam_new - lam) <= tol * lam_new:
                return lam_new
            lam = lam_new
    # clustered top eigenvalues: fall back to Lanczos on the same operator
    if n < 3:
        return float(np.max(np.linalg.eigvalsh(np.column_stack([apply(e) for e in np.eye(n)]))))
    op = spla.LinearOperator((n, n), matvec=apply, dtype=float)
    try:
        vals = spla.eigsh(op, k=1, which="LA", v0=np.ones(n), tol=tol, maxiter=maxiter,
                          return_eigenvectors=False)
    except spla.ArpackNoConvergence as exc:
        raise ArithmeticError("power iteration did not converge") from exc
    return float(vals[0])


def extreme_singular_values(L, tol: float = 1e-8, maxiter: int | None = None) -> tuple[float, float]:
    """(sigma_min, sigma_max) by power iteration on L^T L and on (L^T L)^{-1}.

    The inverse is applied through one sparse LU factorization of L; the assembled
    systems are block lower bidiagonal so the factors stay sparse.
    """
    M = as_csr(L).tocsc()
    n = M.shape[0]
    if M.shape[0] != M.shape[1]:
        raise ValueError("square matrix expected")
    maxiter = 10 * n if maxiter is None else maxiter
    Mt = M.T.tocsr()
    smax2 = _rayleigh_power(lambda x: Mt @ (M @ x), n, tol, maxiter)
    try:
        lu = spla.splu(M)
    except RuntimeError as exc:
        raise ArithmeticError("matrix is singular") from exc

    def inv_normal(x):
        return lu.solve(lu.solve(x, trans="T"))

    inv_smin2 = _rayleigh_power(inv_normal, n, tol, maxiter)
    return 1.0 / math.sqrt(inv_smin2), math.sqrt(smax2)


# ---------------------------------------------------------------- Gershgorin


def _offdiag_sums(M: sp.csr_matrix):
    absM = abs(M)
    diag = np.abs(M.diagonal())
    r = np.asarray(absM.sum(axis=1)).ravel() - diag
    cs = np.asarray(absM.sum(axis=0)).ravel() - diag
    return diag, r, cs


def gershgorin_eigen_bounds(H) -> tuple[float, float]:
    """(lower bound on |lambda|_min, upper bound on |lambda|_max) for symmetric H.

    Discs are applied both to H and to H^2 (whose eigenvalues are lambda^2); the
    tighter of the two is returned. For a dilation, H^2 = diag(L L^T, L^T L).
    """
    M = as_csr(H)
    if (abs(M - M.T) > 0).nnz:
        raise ValueError("symmetric matrix expected")
    d = M.diagonal()
    r = np.asarray(abs(M).sum(axis=1)).ravel() - np.abs(d)
    lo1 = float(np.min(np.maximum(np.abs(d) - r, 0.0)))
    hi1 = float(np.max(np.abs(d) + r))
    M2 = sp.csr_matrix(M @ M)
    d2 = M2.diagonal()
    r2 = np.asarray(abs(M2).sum(axis=1)).ravel() - np.abs(d2)
    lo2 = math.sqrt(max(float(np.min(d2 - r2)), 0.0))
    hi2 = math.sqrt(float(np.max(d2 + r2)))
    return max(lo1, lo2), min(hi1, hi2)


def gershgorin_singular_bounds(A) -> list[list[float]]:
    """Per-row intervals [(|a_ii| - s_i)_+, |a_ii| + s_i] with s_i = max(row, column off-diagonal sums)."""
    M = as_csr(A)
    if M.shape[0] != M.shape[1]:
        raise ValueError("square matrix expected")
    diag, r, cs = _offdiag_sums(M)
    s = np.maximum(r, cs)
    return [[float(max(a - b, 0.0)), float(a + b)] for a, b in zip(diag, s)]


def interval_union_contains(intervals, values, rtol: float = 1e-12) -> np.ndarray:
    """Boolean mask: which values lie in the union of the closed intervals."""
    iv = np.asarray(intervals, dtype=float)
    vals = np.asarray(values, dtype=float)[:, None]
    slack = rtol * np.maximum(1.0, np.abs(iv).max())
    return np.any((vals >= iv[None, :, 0] - slack) & (vals <= iv[None, :, 1] + slack), axis=1)


# ---------------------------------------------------------------- closed-form bounds


def _need(cond: bool, msg: str):
    if not cond:
        raise HypothesisError(msg)


_RT = 1 + 1e-12


def theorem_bounds(scheme: str, **p) -> tuple[float, float]:
    """Closed-form (sigma_lower, sigma_upper) for the space-time matrix of ``scheme``.

    Schemes and required parameters:
      ``ODE``: a, theta, tau.  ``Heat``: theta in {0, 1/2}, tau, h, d.
      ``Upwind``: tau, h, d.  ``PreconditionedIMEX``: tau, h, eps.
      ``RelaxationRescaled``: tau, h, eps.  ``Penalized``: tau, h, eps.
    The lower bound may be nonpositive; callers decide whether it is informative.
    """
    s = scheme
    if s == "ODE":
        a, th, tau = p["a"], p["theta"], p["tau"]
        _need(th == 1 or tau < 1 / (a * (1 - th)), "tau < 1/(a(1-theta)) required")
        return a * tau, 2 + abs(2 * th - 1) * a * tau
    if s == "Heat":
        th, tau, h, d = p["theta"], p["tau"], p["h"], p.get("d", 1)
        beta = tau / h**2
        _need(tau <= _RT / (8 * d), "tau <= 1/(8d) required")
        if th == 0:
            _need(beta <= _RT / (4 * d), "tau/h^2 <= 1/(4d) required")
            return 8 * tau, 3.0
        if th == 0.5:
            return 8 * tau, math.sqrt(max(4.0, (4 * d * beta) ** 2))
        raise HypothesisError("theta must be 0 or 1/2")
    if s == "Upwind":
        tau, h, d = p["tau"], p["h"], p.get("d", 1)
        _need(tau / h <= _RT / d, "beta = tau/h <= 1/d required")
        return tau, 2.0
    if s == "PreconditionedIMEX":
        tau, h, eps = p["tau"], p["h"], p["eps"]
        beta = tau / h
        iota = tau / h**2
        _need(beta <= 0.5 * _RT, "beta <= 1/2 required")
        _need(abs(beta - iota * h) <= 1e-12 * max(beta, 1.0), "tau = iota h^2 coupling required")
        return h**2 / 8 - (3 * beta + 2 - tau) * eps / (1 + eps), 2 + beta
    if s == "RelaxationRescaled":
        tau, h, eps = p["tau"], p["h"], p["eps"]
        beta = tau / h
        _need(beta <= _RT and tau <= 1 and h <= 1, "beta <= 1 and tau, h <= 1 required")
        _need(tau / h**2 <= 4 * _RT, "tau/h^2 <= 4 required")
        alpha = eps / (tau + eps) * (
            (1 + tau) / tau * beta**2 / 2 + beta / tau + (1 + tau) * (beta - beta**2 / 2) + tau
        )
        return tau / 4 - alpha, 5 + alpha
    if s == "Penalized":
        tau, h, eps = p["tau"], p["h"], p["eps"]
        _need(tau / h <= 0.5 * _RT, "beta <= 1/2 required")
        alpha = eps / (tau + eps) * (2 + 4 * tau) / tau
        return tau / 3 - alpha, 4 + 2 * alpha
    raise HypothesisError(f"no closed-form bound for scheme {scheme!r}")


def imex_sharp_sigma_lower(tau: float, beta: float) -> float:
    """1 - sqrt((1 - tau)^2 + beta^2), the optimized lower bound for the IMEX matrix."""
    return 1.0 - math.sqrt((1 - tau) ** 2 + beta**2)


# ---------------------------------------------------------------- Fourier symbols


def fourier_symbol(scheme: str, k: float = 0.0, **p) -> np.ndarray:
    """Per-frequency 2x2 symbol.

    ``Penalized``: returns ``[[c1, c2], [d2, d1]]`` for the recurrence
    ``u^{n+1} + c1 u^n + c2 v^n = 0``, ``v^{n+1} + d1 v^n + d2 u^n = 0``, using the
    coefficients as displayed in the stability analysis (params tau, h, eps).

    ``ExplicitMultiscale``: the rescaled amplification matrix in terms of
    ``a = |sin(kh/2)|`` (pass ``a`` directly or ``k`` with ``h``), ``c_p`` and ``delta``.
    """
    if scheme == "Penalized":
        tau, h, eps = p["tau"], p["h"], p["eps"]
        beta, bt = tau / h, tau / h**2
        ng = (1 - eps) / (eps + tau)
        ig = eps / (eps + tau)
        s_half = math.sin(k * h / 2) ** 2
        s_full = math.sin(k * h)
        den = 1 + 4 * bt * s_half
        c1 = (-1 - 4 * bt * s_half + (2 * beta + beta**2 * ng) * s_full**2) / den
        c2 = 1j * beta * ig * s_full
        d1 = 2 * beta * ig * s_half
        d2 = 1j * (beta - 2 * beta**2 * ng * s_full**2) * s_full / den
        return np.array([[c1, c2], [d2, d1]], dtype=complex)
    if scheme == "ExplicitMultiscale":
        cp, delta = p["c_p"], p["delta"]
        a = p.get("a")
        if a is None:
            a = abs(math.sin(k * p["h"] / 2))
        sign = p.get("sign", 1.0)
        diag = 1 - 2 * cp * a * a
        off = sign * 1j * 2 * cp * a * math.sqrt(max(1 - a * a, 0.0))
        return np.array([[diag, off], [off, diag - cp * delta]], dtype=complex)
    raise ValueError(f"no Fourier symbol for scheme {scheme!r}")


def explicit_symbol_norms(a, c_p, delta) -> np.ndarray:
    """Vectorized spectral norm of the explicit-scheme symbol over arrays of (a, c_p, delta)."""
    a, c_p, delta = np.broadcast_arrays(np.asarray(a, float), np.asarray(c_p, float), np.asarray(delta, float))
    diag = 1 - 2 * c_p * a**2
    off = 2 * c_p * a * np.sqrt(np.clip(1 - a**2, 0, None))
    M = np.zeros(a.shape + (2, 2), dtype=complex)
    M[..., 0, 0] = diag
    M[..., 1, 1] = diag - c_p * delta
    M[..., 0, 1] = 1j * off
    M[..., 1, 0] = 1j * off
    return np.linalg.norm(M, ord=2, axis=(-2, -1))


# ---------------------------------------------------------------- reports


def spectral_report(L, dense_cap: int = DENSE_CAP, tol: float = 1e-8, bounds=None, intervals: bool = True):
    """Extreme singular values (dense below ``dense_cap``, iterative above) plus bounds."""
    M = as_csr(L)
    n = M.shape[0]
    if n <= dense_cap:
        sv = singular_values_dense(M, cap=dense_cap)
        smin, smax, method = float(sv[-1]), float(sv[0]), Method.DENSE_SVD
    else:
        smin, smax = extreme_singular_values(M, tol=tol)
        method = Method.ITERATIVE
    lo = hi = None
    if bounds is not None:
        lo, hi = bounds
    return SpectralReport(
        sigma_min=smin,
        sigma_max=smax,
        kappa=smax / smin if smin > 0 else math.inf,
        sparsity=SparseMatrix(M).sparsity(),
        gershgorin_intervals=gershgorin_singular_bounds(M) if intervals else [],
        theorem_lower=lo,
        theorem_upper=hi,
        method=method,
        lower_bound_positive=None if lo is None else bool(lo > 0),
    )
