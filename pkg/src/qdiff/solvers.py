"""Time-marching reference solvers with exact operation counts, CG, and a direct space-time solve."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import assembler as asm
from .config import ConfigError, Equation, ProblemConfig, Scheme, manufactured_telegraph, validate_config
from .sparse import as_csr

CG_TOL_ORACLE = 1e-12
CG_TOL_BENCH = 1e-8
EXPLICIT_STEP_CAP = 10**7


class NumericalError(RuntimeError):
    """Raised when an iteration fails to converge or a system is singular."""


@dataclass
class OpCounter:
    """Floating-point additions, multiplications and divisions performed in a run."""

    adds: int = 0
    muls: int = 0
    divs: int = 0

    def total(self) -> int:
        return self.adds + self.muls + self.divs

    def reset(self) -> None:
        self.adds = self.muls = self.divs = 0

    # counted kernels -------------------------------------------------------

    def spmv(self, A: sp.csr_matrix, x: np.ndarray) -> np.ndarray:
        row_nnz = np.diff(A.indptr)
        self.muls += int(A.nnz)
        self.adds += int(A.nnz - np.count_nonzero(row_nnz))
        return A @ x

    def axpy(self, alpha: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """alpha*x + y."""
        self.muls += x.size
        self.adds += x.size
        return alpha * x + y

    def add(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        self.adds += x.size
        return x + y

    def sub(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        self.adds += x.size
        return x - y

    def scale(self, alpha: float, x: np.ndarray) -> np.ndarray:
        self.muls += x.size
        return alpha * x

    def dot(self, x: np.ndarray, y: np.ndarray) -> float:
        self.muls += x.size
        self.adds += max(x.size - 1, 0)
        return float(x @ y)

    def div(self, a: float, b: float) -> float:
        self.divs += 1
        return a / b

    def sparse_add(self, x: np.ndarray, nnz: int) -> np.ndarray:
        """Add a vector known to have ``nnz`` nonzeros (boundary data)."""
        self.adds += nnz
        return x


@dataclass
class MarchResult:
    """Per-step histories (``n_steps + 1`` rows including the initial state)."""

    u: np.ndarray
    times: np.ndarray
    ops: OpCounter
    v: np.ndarray | None = None
    final_error_inf: float | None = None
    nodes: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def history(self) -> list[np.ndarray]:
        if self.v is None:
            return list(self.u)
        return [np.concatenate([a, b]) for a, b in zip(self.u, self.v)]

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "time", "node", "u", "v"])
        for n, t in enumerate(self.times):
            for j in range(self.u.shape[1]):
                v = "" if self.v is None else repr(float(self.v[n, j]))
                w.writerow([n, repr(float(t)), j, repr(float(self.u[n, j])), v])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        Path(path).write_text(self.csv_text())


def stack_solution(system: asm.SpaceTimeSystem, result: MarchResult) -> np.ndarray:
    """Field-major space-time vector of a march, with the system's variable scaling applied."""
    fields = [result.u[1:]] if system.n_fields == 1 else [result.u[1:], result.v[1:]]
    parts = []
    for name, hist in zip(system.field_names, fields):
        parts.append(system.variable_scaling.get(name, 1.0) * hist.ravel())
    return np.concatenate(parts)


def march_residual(system: asm.SpaceTimeSystem, result: MarchResult) -> float:
    return system.residual(stack_solution(system, result))


# ---------------------------------------------------------------- CG


def cg_solve(A, b, tol: float = CG_TOL_ORACLE, counter: OpCounter | None = None, maxiter: int | None = None):
    """Conjugate gradients from a zero initial guess; returns ``(x, iterations)``.

    Stops when ``||A x - b||_2 <= tol * ||b||_2``.
    """
    A = as_csr(A)
    b = np.asarray(b, dtype=float)
    n = b.size
    c = counter if counter is not None else OpCounter()
    maxiter = 10 * n if maxiter is None else maxiter
    x = np.zeros(n)
    r = b.copy()
    p = r.copy()
    rr = c.dot(r, r)
    target = (tol**2) * rr
    if rr == 0.0:
        return x, 0
    for it in range(1, maxiter + 1):
        Ap = c.spmv(A, p)
        pAp = c.dot(p, Ap)
        if pAp <= 0:
            raise NumericalError("matrix is not positive definite")
        alpha = c.div(rr, pAp)
        x = c.axpy(alpha, p, x)
        r = c.axpy(-alpha, Ap, r)
        rr_new = c.dot(r, r)
        if rr_new <= target:
            return x, it
        beta = c.div(rr_new, rr)
        p = c.axpy(beta, p, r)
        rr = rr_new
    raise NumericalError(f"CG did not converge in {maxiter} iterations")


# ---------------------------------------------------------------- scalar problems


def march_ode(config: ProblemConfig) -> MarchResult:
    c = OpCounter()
    a, th, tau = config.a, config.theta, config.tau
    s1 = 1 - (1 - th) * a * tau
    s2 = 1 + th * a * tau
    u = np.empty(config.n_t + 1)
    u[0] = config.u0
    for n in range(config.n_t):
        c.muls += 1
        c.divs += 1
        u[n + 1] = s1 * u[n] / s2
    times = tau * np.arange(config.n_t + 1)
    err = abs(u[-1] - math.exp(-a * config.t_final))
    return MarchResult(u[:, None], times, c, final_error_inf=err)


def march_heat(config: ProblemConfig, u0=None, tol: float = CG_TOL_ORACLE) -> MarchResult:
    """Theta scheme; explicit update for theta = 0, CG per step otherwise."""
    if config.equation != Equation.HEAT:
        raise ConfigError("march_heat needs a Heat config")
    problems = validate_config(config)
    if problems:
        raise ConfigError("; ".join(problems))
    A, B = asm.heat_blocks(config)
    A, B = A.csr, B.csr
    u = asm.heat_initial(config) if u0 is None else np.asarray(u0, dtype=float)
    c = OpCounter()
    hist = [u]
    iters = 0
    for _ in range(config.n_t):
        rhs = c.spmv(B, u)
        if config.theta == 0:
            u = rhs
        else:
            u, it = cg_solve(A, rhs, tol, c)
            iters += it
        hist.append(u)
    times = config.tau * np.arange(config.n_t + 1)
    err = None
    if u0 is None:
        err = float(np.max(np.abs(hist[-1] - asm.heat_exact_final(config, config.t_final))))
    return MarchResult(np.array(hist), times, c, final_error_inf=err, nodes=asm.grid_points(config),
                       meta={"cg_iterations": iters, "cg_tol": tol})


def march_upwind(config: ProblemConfig, u0=None) -> MarchResult:
    if config.equation != Equation.HYPERBOLIC:
        raise ConfigError("march_upwind needs a Hyperbolic config")
    problems = validate_config(config)
    if problems:
        raise ConfigError("; ".join(problems))
    B = asm.upwind_step_matrix(config).csr
    u = asm.upwind_initial(config) if u0 is None else np.asarray(u0, dtype=float)
    c = OpCounter()
    hist = [u]
    for _ in range(config.n_t):
        u = c.spmv(B, u)
        hist.append(u)
    times = config.tau * np.arange(config.n_t + 1)
    err = None
    if u0 is None:
        err = float(np.max(np.abs(hist[-1] - asm.upwind_exact(config, config.t_final))))
    return MarchResult(np.array(hist), times, c, final_error_inf=err, nodes=asm.grid_points(config, True))


# ---------------------------------------------------------------- telegraph


def _telegraph_setup(config: ProblemConfig, exact):
    if config.equation != Equation.TELEGRAPH:
        raise ConfigError("telegraph marcher needs a Telegraph config")
    problems = validate_config(config)
    if problems:
        raise ConfigError("; ".join(problems))
    return asm.telegraph_data(config, exact)


def _boundary_nnz(td) -> int:
    return 1 if td.m == 1 else 2


def _telegraph_result(td, us, vs, c, config, exact, meta=None):
    times = td.tau * np.arange(len(us))
    if exact is None:
        ue, ve = manufactured_telegraph(td.x, config.t_final, config.epsilon)
    else:
        ue, ve = exact(td.x, config.t_final)
    err = float(max(np.max(np.abs(us[-1] - ue)), np.max(np.abs(vs[-1] - ve))))
    return MarchResult(np.array(us), times, c, v=np.array(vs), final_error_inf=err, nodes=td.x, meta=meta or {})


def march_imex(config: ProblemConfig, preconditioned: bool = False, exact=None) -> MarchResult:
    """u from the explicit first equation, then v with the new u on the right-hand side.

    Row scaling does not change the iterates, so ``preconditioned`` only tags the result.
    """
    td = _telegraph_setup(config, exact)
    A, B = asm.imex_blocks(td)
    ig, ng, hb = td.inv_gamma, td.nu_over_gamma, td.beta / 2
    c = OpCounter()
    nb = _boundary_nnz(td)
    u, v = td.u0.copy(), td.v0.copy()
    us, vs = [u], [v]
    for n in range(config.n_t):
        f = hb * (td.b(n) - td.c_tilde(n))
        g1 = hb * (td.c(n) - td.b_tilde(n))
        g2 = hb * td.b_tilde(n + 1)
        c.sparse_add(f, 3 * nb)
        c.sparse_add(g1, 3 * nb)
        c.sparse_add(g2, nb)
        u_new = c.add(c.sub(c.spmv(B, u), c.spmv(A, v)), f)
        w = c.add(c.sub(c.spmv(B, v), c.spmv(A, u)), g1)
        v_new = c.sub(c.scale(ig, w), c.scale(ng, c.add(c.spmv(A, u_new), g2)))
        u, v = u_new, v_new
        us.append(u)
        vs.append(v)
    return _telegraph_result(td, us, vs, c, config, exact, {"preconditioned": preconditioned})


def march_relaxation(config: ProblemConfig, exact=None) -> MarchResult:
    """Relaxation step (u* = u^n) followed by the convection step."""
    td = _telegraph_setup(config, exact)
    A, B = asm.imex_blocks(td)
    ig, ng, hb = td.inv_gamma, td.nu_over_gamma, td.beta / 2
    c = OpCounter()
    nb = _boundary_nnz(td)
    u, v = td.u0.copy(), td.v0.copy()
    us, vs = [u], [v]
    for n in range(config.n_t):
        us_ = u
        vs_ = c.sub(c.scale(ig, v), c.scale(ng, c.sparse_add(c.spmv(A, us_) + hb * td.b_tilde(n), nb)))
        u = c.sparse_add(c.sub(c.spmv(B, us_), c.spmv(A, vs_)) + hb * (td.b(n) - td.c_tilde(n)), 3 * nb)
        v = c.sparse_add(c.sub(c.spmv(B, vs_), c.spmv(A, us_)) + hb * (td.c(n) - td.b_tilde(n)), 3 * nb)
        us.append(u)
        vs.append(v)
    return _telegraph_result(td, us, vs, c, config, exact)


def march_penalized(config: ProblemConfig, exact=None, tol: float = CG_TOL_ORACLE) -> MarchResult:
    """Implicit penalty solve for u* by CG, then the convection step."""
    td = _telegraph_setup(config, exact)
    A, B = asm.imex_blocks(td)
    Bt = asm.penalty_matrix(td)
    bt_ratio = td.tau / td.h**2
    conv = sp.csr_matrix(B + Bt - sp.identity(td.m))
    ig, ng, hb = td.inv_gamma, td.nu_over_gamma, td.beta / 2
    c = OpCounter()
    nb = _boundary_nnz(td)
    u, v = td.u0.copy(), td.v0.copy()
    us, vs = [u], [v]
    iters = 0
    for n in range(config.n_t):
        b = td.b(n)
        rhs = c.sparse_add(u + bt_ratio * b, nb)
        c.muls += nb
        u_star, it = cg_solve(Bt, rhs, tol, c)
        iters += it
        v_star = c.sub(c.scale(ig, v), c.scale(ng, c.sparse_add(c.spmv(A, u_star) + hb * td.b_tilde(n), nb)))
        u = c.sparse_add(
            c.sub(c.spmv(conv, u_star), c.spmv(A, v_star)) + hb * (b - td.c_tilde(n)) - bt_ratio * b, 4 * nb
        )
        v = c.sparse_add(c.sub(c.spmv(B, v_star), c.spmv(A, u_star)) + hb * (td.c(n) - td.b_tilde(n)), 3 * nb)
        us.append(u)
        vs.append(v)
    return _telegraph_result(td, us, vs, c, config, exact, {"cg_iterations": iters, "cg_tol": tol})


def march_explicit_multiscale(config: ProblemConfig, exact=None, force: bool = False) -> MarchResult:
    if config.n_t > EXPLICIT_STEP_CAP and not force:
        raise ConfigError(f"n_t = {config.n_t} exceeds {EXPLICIT_STEP_CAP}; pass force=True to run anyway")
    td = _telegraph_setup(config, exact)
    A, B = asm.explicit_blocks(td)
    Bv = sp.csr_matrix(B - (td.tau / td.eps) * sp.identity(td.m))
    se, eps, hb = math.sqrt(td.eps), td.eps, td.beta / 2
    c = OpCounter()
    nb = _boundary_nnz(td)
    u, v = td.u0.copy(), td.v0.copy()
    us, vs = [u], [v]
    for n in range(config.n_t):
        f = hb * (td.b(n) / se - td.c_tilde(n))
        g = hb * (td.c(n) / se - td.b_tilde(n) / eps)
        c.sparse_add(f, 4 * nb)
        c.sparse_add(g, 4 * nb)
        u_new = c.add(c.sub(c.spmv(B, u), c.spmv(A, v)), f)
        v_new = c.add(c.sub(c.spmv(Bv, v), c.scale(1 / eps, c.spmv(A, u))), g)
        u, v = u_new, v_new
        us.append(u)
        vs.append(v)
    return _telegraph_result(td, us, vs, c, config, exact)


def march(config: ProblemConfig, **kwargs) -> MarchResult:
    """Run the marcher that matches ``config.scheme``."""
    if config.equation == Equation.ODE:
        return march_ode(config)
    if config.equation == Equation.HEAT:
        return march_heat(config, **kwargs)
    if config.equation == Equation.HYPERBOLIC:
        return march_upwind(config, **kwargs)
    s = config.scheme
    if s in (Scheme.IMEX, Scheme.PRECONDITIONED_IMEX):
        return march_imex(config, preconditioned=s == Scheme.PRECONDITIONED_IMEX, **kwargs)
    if s in (Scheme.RELAXATION, Scheme.RELAXATION_RESCALED):
        return march_relaxation(config, **kwargs)
    if s == Scheme.PENALIZED:
        return march_penalized(config, **kwargs)
    if s == Scheme.EXPLICIT_MULTISCALE:
        return march_explicit_multiscale(config, **kwargs)
    raise ConfigError(f"unknown scheme {s!r}")


# ---------------------------------------------------------------- direct oracle


def solve_spacetime_direct(system: asm.SpaceTimeSystem, order_cap: int = 4096) -> np.ndarray:
    """Block forward substitution in time-major order with dense LU per diagonal block.

    Every assembled system is block lower bidiagonal once the fields of one time
    step are grouped together; anything else falls back to a dense LU solve.
    """
    n = system.order
    if n > order_cap:
        raise ValueError(f"order {n} exceeds the direct-solve cap {order_cap}")
    perm = system.time_major_permutation()
    Lt = system.L.csr[perm][:, perm].tocsr()
    Ft = system.F[perm]
    k = system.block_size * system.n_fields
    nt = system.n_steps
    coo = Lt.tocoo()
    if np.any((coo.row // k) - (coo.col // k) > 1) or np.any(coo.col // k > coo.row // k):
        x = sla.solve(Lt.toarray(), Ft)
    else:
        x = np.zeros(n)
        cache: dict[bytes, tuple] = {}
        for step in range(nt):
            rows = slice(step * k, (step + 1) * k)
            D = Lt[rows, rows].toarray()
            rhs = Ft[rows].copy()
            if step > 0:
                rhs -= Lt[rows, (step - 1) * k:step * k] @ x[(step - 1) * k:step * k]
            key = D.tobytes()
            if key not in cache:
                if np.array_equal(D, np.eye(k)):
                    cache[key] = None
                else:
                    lu = sla.lu_factor(D, check_finite=True)
                    if np.any(np.diag(lu[0]) == 0):
                        raise NumericalError("singular diagonal block")
                    cache[key] = lu
            lu = cache[key]
            x[rows] = rhs if lu is None else sla.lu_solve(lu, rhs)
    S = np.empty(n)
    S[perm] = x
    if not np.all(np.isfinite(S)):
        raise NumericalError("direct solve produced non-finite values")
    return S
