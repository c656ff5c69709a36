"""Stencil matrices, per-step operators and all-at-once space-time systems."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .config import (
    ConfigError,
    Equation,
    ProblemConfig,
    Scheme,
    manufactured_telegraph,
    validate_config,
)
from .sparse import SparseMatrix, as_csr

NNZ_BUDGET = 2**20


@dataclass
class SpaceTimeSystem:
    """The pair (L, F) of ``L S = F`` plus block metadata.

    Unknowns are field-major: ``S = [U; V]`` with ``U = [u^1; ...; u^{n_steps}]``.
    ``variable_scaling`` maps a field name to the factor multiplying the physical
    unknown, e.g. ``{"u": 1/tau}`` when the system solves for ``U / tau``.
    """

    L: SparseMatrix
    F: np.ndarray
    block_size: int
    n_steps: int
    scheme: str
    n_fields: int = 1
    variable_scaling: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.F = np.asarray(self.F, dtype=float)
        order = self.block_size * self.n_steps * self.n_fields
        if self.L.shape != (order, order):
            raise ValueError(f"L has shape {self.L.shape}, expected ({order}, {order})")
        if self.F.shape != (order,):
            raise ValueError(f"F has shape {self.F.shape}, expected ({order},)")

    @property
    def order(self) -> int:
        return self.L.n_rows

    @property
    def field_names(self) -> tuple[str, ...]:
        return ("u", "v")[: self.n_fields] if self.n_fields <= 2 else tuple(f"f{i}" for i in range(self.n_fields))

    def split(self, S) -> list[np.ndarray]:
        """Reshape a solution vector into per-field ``(n_steps, block_size)`` arrays."""
        S = np.asarray(S)
        return [blk.reshape(self.n_steps, self.block_size) for blk in np.split(S, self.n_fields)]

    def unscale(self, S) -> list[np.ndarray]:
        """Per-field histories with any variable scaling undone."""
        parts = self.split(S)
        return [p / self.variable_scaling.get(name, 1.0) for p, name in zip(parts, self.field_names)]

    def residual(self, S) -> float:
        return float(np.max(np.abs(self.L @ np.asarray(S) - self.F), initial=0.0))

    def time_major_permutation(self) -> np.ndarray:
        """``perm[k]`` is the field-major index of the k-th unknown in time-major order."""
        m, nt, nf = self.block_size, self.n_steps, self.n_fields
        n = np.arange(nt)[:, None, None]
        f = np.arange(nf)[None, :, None]
        i = np.arange(m)[None, None, :]
        return (f * nt * m + n * m + i).ravel()


# ---------------------------------------------------------------- stencils


def build_laplacian_1d(n_x: int) -> SparseMatrix:
    """tridiag(1, -2, 1) of order n_x - 1."""
    if n_x < 2:
        raise ValueError(f"n_x must be >= 2, got {n_x}")
    m = n_x - 1
    return SparseMatrix(sp.diags([np.ones(m - 1), -2.0 * np.ones(m), np.ones(m - 1)], [-1, 0, 1], shape=(m, m)))


def kron_sum(mat1d, d: int, nnz_budget: int = NNZ_BUDGET) -> sp.csr_matrix:
    """``sum_k I x ... x M x ... x I`` built by index arithmetic on the tensor grid."""
    base = as_csr(mat1d).tocoo()
    m = base.shape[0]
    order = m**d
    est = d * base.nnz * m ** (d - 1)
    if est > nnz_budget:
        raise ValueError(f"Kronecker sum would hold ~{est} nonzeros, over the budget {nnz_budget}")
    rows, cols, vals = [], [], []
    # multi-index (j_1..j_d) flattened row-major; axis k has stride m^(d-1-k)
    rest = np.arange(m ** (d - 1)) if d > 1 else np.zeros(1, dtype=np.int64)
    for k in range(d):
        stride = m ** (d - 1 - k)
        # split the other d-1 indices into a high part (axes < k) and a low part (axes > k)
        hi, lo = np.divmod(rest, stride)
        offset = hi * stride * m + lo
        rows.append((offset[:, None] + base.row[None, :] * stride).ravel())
        cols.append((offset[:, None] + base.col[None, :] * stride).ravel())
        vals.append(np.broadcast_to(base.data[None, :], (rest.size, base.nnz)).ravel())
    out = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(order, order))
    return out.tocsr()


def build_laplacian_dd(n_x: int, d: int, nnz_budget: int = NNZ_BUDGET) -> SparseMatrix:
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    return SparseMatrix(kron_sum(build_laplacian_1d(n_x), d, nnz_budget))


def build_central_difference(n_x: int) -> SparseMatrix:
    """Antisymmetric tridiag(-1, 0, 1) of order n_x - 1 (+1 above the diagonal)."""
    if n_x < 2:
        raise ValueError(f"n_x must be >= 2, got {n_x}")
    m = n_x - 1
    return SparseMatrix(sp.diags([-np.ones(m - 1), np.ones(m - 1)], [-1, 1], shape=(m, m)))


def build_shift(n_x: int) -> SparseMatrix:
    """n_x x n_x matrix with ones on the first subdiagonal."""
    return SparseMatrix(sp.diags([np.ones(n_x - 1)], [-1], shape=(n_x, n_x)))


def block_bidiagonal(diag, sub, n_steps: int) -> sp.csr_matrix:
    """Block lower bidiagonal matrix with constant diagonal and subdiagonal blocks."""
    diag = as_csr(diag)
    sub = as_csr(sub)
    out = sp.kron(sp.identity(n_steps), diag) + sp.kron(sp.eye(n_steps, k=-1), sub)
    return sp.csr_matrix(out)


def _bmat(blocks) -> SparseMatrix:
    return SparseMatrix(sp.bmat(blocks, format="csr"))


def _check(config: ProblemConfig, equation: Equation):
    if config.equation != equation:
        raise ConfigError(f"expected a {equation.value} config, got {config.equation.value}")
    problems = validate_config(config)
    if problems:
        raise ConfigError("; ".join(problems))


# ---------------------------------------------------------------- ODE, heat, upwind


def build_ode_theta(a: float, theta: float, tau: float, n_t: int, u0: float = 1.0) -> SpaceTimeSystem:
    if a <= 0:
        raise ConfigError(f"a must be positive, got {a}")
    if theta < 1 and not tau < 1.0 / (a * (1 - theta)):
        raise ConfigError(f"step condition tau < 1/(a(1-theta)) violated (tau={tau})")
    s1 = 1 - (1 - theta) * a * tau
    s2 = 1 + theta * a * tau
    L = sp.diags([s2 * np.ones(n_t), -s1 * np.ones(n_t - 1)], [0, -1], shape=(n_t, n_t))
    F = np.zeros(n_t)
    F[0] = s1 * u0
    return SpaceTimeSystem(SparseMatrix(L), F, 1, n_t, "ODE-Theta", meta={"a": a, "theta": theta, "tau": tau})


def ode_system(config: ProblemConfig) -> SpaceTimeSystem:
    _check(config, Equation.ODE)
    return build_ode_theta(config.a, config.theta, config.tau, config.n_t, config.u0)


def grid_points(config: ProblemConfig, include_last: bool = False) -> np.ndarray:
    """Flattened (order, d) array of unknown node coordinates.

    Heat unknowns are the interior nodes j = 1..n_x-1; upwind unknowns are j = 1..n_x.
    """
    stop = config.n_x + 1 if include_last else config.n_x
    x = config.domain_lo + config.h * np.arange(1, stop)
    mesh = np.meshgrid(*([x] * config.d), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


def heat_initial(config: ProblemConfig) -> np.ndarray:
    """Lowest Dirichlet mode ``prod sin(pi (x - lo)/len)`` at the interior nodes."""
    length = config.domain_hi - config.domain_lo
    pts = grid_points(config)
    return np.prod(np.sin(math.pi * (pts - config.domain_lo) / length), axis=-1)


def heat_exact_final(config: ProblemConfig, t: float) -> np.ndarray:
    length = config.domain_hi - config.domain_lo
    return math.exp(-config.d * (math.pi / length) ** 2 * t) * heat_initial(config)


def heat_blocks(config: ProblemConfig):
    """Per-step operators (A, B) for the theta scheme with beta = tau/h^2."""
    Lhd = build_laplacian_dd(config.n_x, config.d).csr
    beta = config.tau / config.h**2
    ident = sp.identity(Lhd.shape[0], format="csr")
    A = ident - config.theta * beta * Lhd
    B = ident + (1 - config.theta) * beta * Lhd
    return SparseMatrix(A), SparseMatrix(B)


def build_heat_system(config: ProblemConfig, u0=None) -> SpaceTimeSystem:
    _check(config, Equation.HEAT)
    A, B = heat_blocks(config)
    u0 = heat_initial(config) if u0 is None else np.asarray(u0, dtype=float)
    m = A.n_rows
    L = block_bidiagonal(A, -B.csr, config.n_t)
    F = np.zeros(m * config.n_t)
    # homogeneous Dirichlet data: every f^n vanishes
    F[:m] = B @ u0
    return SpaceTimeSystem(
        SparseMatrix(L), F, m, config.n_t, "Heat-Theta",
        meta={"theta": config.theta, "beta": config.tau / config.h**2, "d": config.d, "u0": u0},
    )


def upwind_initial(config: ProblemConfig) -> np.ndarray:
    """``prod sin^4(pi (x - lo)/len)`` at nodes j = 1..n_x; zero-extended upstream."""
    length = config.domain_hi - config.domain_lo
    pts = grid_points(config, include_last=True)
    return np.prod(np.sin(math.pi * (pts - config.domain_lo) / length) ** 4, axis=-1)


def upwind_exact(config: ProblemConfig, t: float) -> np.ndarray:
    """Profile transported with unit velocity in every direction, zero inflow."""
    length = config.domain_hi - config.domain_lo
    pts = grid_points(config, include_last=True) - t
    s = (pts - config.domain_lo) / length
    vals = np.where((s >= 0) & (s <= 1), np.sin(math.pi * s) ** 4, 0.0)
    return np.prod(vals, axis=-1)


def upwind_step_matrix(config: ProblemConfig) -> SparseMatrix:
    beta = config.tau / config.h
    T = kron_sum(build_shift(config.n_x), config.d)
    return SparseMatrix(beta * T + (1 - config.d * beta) * sp.identity(T.shape[0], format="csr"))


def build_upwind_hyperbolic(config: ProblemConfig, u0=None) -> SpaceTimeSystem:
    _check(config, Equation.HYPERBOLIC)
    B = upwind_step_matrix(config)
    u0 = upwind_initial(config) if u0 is None else np.asarray(u0, dtype=float)
    m = B.n_rows
    L = block_bidiagonal(sp.identity(m), -B.csr, config.n_t)
    F = np.zeros(m * config.n_t)
    F[:m] = B @ u0
    return SpaceTimeSystem(
        SparseMatrix(L), F, m, config.n_t, "Hyperbolic-Upwind",
        meta={"beta": config.tau / config.h, "d": config.d, "u0": u0},
    )


# ---------------------------------------------------------------- telegraph


@dataclass(frozen=True)
class TelegraphData:
    """Stencils, parameters and boundary/initial data shared by the telegraph schemes."""

    m: int
    tau: float
    h: float
    beta: float
    eps: float
    x: np.ndarray
    Mh: sp.csr_matrix
    Lh: sp.csr_matrix
    u0: np.ndarray
    v0: np.ndarray
    bnd_u: np.ndarray  # (n_t + 1, 2): u at (x_0, x_N) for every time level
    bnd_v: np.ndarray

    def _edge(self, vals, left_sign):
        out = np.zeros(self.m)
        out[0] += left_sign * vals[0]
        out[-1] += vals[1]
        return out

    def b(self, n):
        return self._edge(self.bnd_u[n], 1.0)

    def b_tilde(self, n):
        return self._edge(self.bnd_u[n], -1.0)

    def c(self, n):
        return self._edge(self.bnd_v[n], 1.0)

    def c_tilde(self, n):
        return self._edge(self.bnd_v[n], -1.0)

    @property
    def inv_gamma(self):
        """1/gamma = eps/(eps+tau)."""
        return self.eps / (self.eps + self.tau)

    @property
    def nu_over_gamma(self):
        """nu/gamma = (1-eps)/(eps+tau), finite at eps = 0."""
        return (1 - self.eps) / (self.eps + self.tau)


def telegraph_data(config: ProblemConfig, exact=None) -> TelegraphData:
    """Grid, stencils and boundary traces; ``exact(x, t) -> (u, v)`` defaults to the manufactured pair."""
    if exact is None:
        eps = config.epsilon

        def exact(x, t):
            return manufactured_telegraph(x, t, eps)

    n_x, h, tau = config.n_x, config.h, config.tau
    x = config.domain_lo + h * np.arange(1, n_x)
    u0, v0 = exact(x, 0.0)
    times = tau * np.arange(config.n_t + 1)
    edges = np.array([config.domain_lo, config.domain_hi])
    bu, bv = exact(edges[None, :], times[:, None])
    return TelegraphData(
        m=n_x - 1, tau=tau, h=h, beta=tau / h, eps=config.epsilon, x=x,
        Mh=build_central_difference(n_x).csr, Lh=build_laplacian_1d(n_x).csr,
        u0=np.asarray(u0, float), v0=np.asarray(v0, float),
        bnd_u=np.asarray(bu, float), bnd_v=np.asarray(bv, float),
    )


def _two_field(L11, L12, L21, L22, F1, F2, td, n_t, scheme, scaling=None, meta=None):
    L = _bmat([[L11, L12], [L21, L22]])
    return SpaceTimeSystem(
        L, np.concatenate([F1, F2]), td.m, n_t, scheme, n_fields=2,
        variable_scaling=dict(scaling or {}), meta=dict(meta or {}),
    )


def imex_blocks(td: TelegraphData):
    I = sp.identity(td.m, format="csr")
    A = (td.beta / 2) * td.Mh
    B = I + (td.beta / 2) * td.Lh
    return sp.csr_matrix(A), sp.csr_matrix(B)


def build_imex_system(config: ProblemConfig, preconditioned: bool = False, exact=None) -> SpaceTimeSystem:
    """IMEX space-time system; with ``preconditioned`` the v-rows carry rho = eps/(1+eps).

    The preconditioned variant is assembled from the closed forms rho, rho*nu and
    rho*gamma so that eps = 0 gives the limit system directly.
    """
    _check(config, Equation.TELEGRAPH)
    td = telegraph_data(config, exact)
    n_t, eps, tau, beta = config.n_t, td.eps, td.tau, td.beta
    A, B = imex_blocks(td)
    I = sp.identity(td.m, format="csr")
    if preconditioned:
        r, r_nu, r_gamma = eps / (1 + eps), (1 - eps) / (1 + eps), (tau + eps) / (1 + eps)
    else:
        if eps <= 0:
            raise ConfigError("unpreconditioned IMEX needs epsilon > 0")
        r, r_nu, r_gamma = 1.0, (1 - eps) / eps, 1 + tau / eps

    L11 = block_bidiagonal(I, -B, n_t)
    L12 = sp.kron(sp.eye(n_t, k=-1), A)
    L21 = block_bidiagonal(r_nu * A, r * A, n_t)
    L22 = block_bidiagonal(r_gamma * I, -r * B, n_t)

    F1 = np.zeros(td.m * n_t)
    F2 = np.zeros(td.m * n_t)
    for n in range(n_t):
        f = (beta / 2) * (td.b(n) - td.c_tilde(n))
        g = r * (beta / 2) * (td.c(n) - td.b_tilde(n)) - r_nu * (beta / 2) * td.b_tilde(n + 1)
        F1[n * td.m:(n + 1) * td.m] = f
        F2[n * td.m:(n + 1) * td.m] = g
    F1[: td.m] += B @ td.u0 - A @ td.v0
    F2[: td.m] += r * (-(A @ td.u0) + B @ td.v0)
    tag = "Telegraph-PreconditionedIMEX" if preconditioned else "Telegraph-IMEX"
    return _two_field(L11, L12, L21, L22, F1, F2, td, n_t, tag,
                      meta={"epsilon": eps, "tau": tau, "h": td.h, "beta": beta, "rho": r})


def apply_imex_preconditioner(system: SpaceTimeSystem, eps: float) -> SpaceTimeSystem:
    """Row-scale the v-equations of an assembled IMEX system by rho = eps/(1+eps)."""
    if system.n_fields != 2 or not system.scheme.endswith("IMEX") or "Preconditioned" in system.scheme:
        raise ValueError("expected an unpreconditioned two-field IMEX system")
    rho = eps / (1 + eps)
    half = system.order // 2
    scale = np.concatenate([np.ones(half), rho * np.ones(half)])
    P = sp.diags(scale)
    meta = dict(system.meta, rho=rho)
    return SpaceTimeSystem(
        SparseMatrix(P @ system.L.csr), scale * system.F, system.block_size, system.n_steps,
        "Telegraph-PreconditionedIMEX", 2, dict(system.variable_scaling), meta,
    )


def relaxation_blocks(td: TelegraphData):
    """(A1, A2, B1, B2) with the eps-dependent ratios in closed form."""
    A, B = imex_blocks(td)
    ig, ng = td.inv_gamma, td.nu_over_gamma
    A1 = ig * A
    A2 = ig * B
    B1 = B + ng * (A @ A)
    B2 = A + ng * (B @ A)
    return tuple(sp.csr_matrix(X) for X in (A1, A2, B1, B2))


def _rescale_u(L11, L12, L21, L22, F1, s):
    """Solve for ``U * s``: scale the u-rows by s and the u-columns by 1/s."""
    return L11, s * L12, L21 / s, L22, s * F1


def build_relaxation_system(config: ProblemConfig, rescaled: bool = False, exact=None) -> SpaceTimeSystem:
    """Diffusive relaxation system; ``rescaled`` solves for ``[U/tau; V]``.

    The rescaled blocks are ``[[L11, L12/tau], [tau L21, L22]]`` with right-hand side
    ``[F1/tau; F2]``.
    """
    _check(config, Equation.TELEGRAPH)
    td = telegraph_data(config, exact)
    n_t, beta, tau = config.n_t, td.beta, td.tau
    A, B = imex_blocks(td)
    A1, A2, B1, B2 = relaxation_blocks(td)
    I = sp.identity(td.m, format="csr")
    ng = td.nu_over_gamma
    sub = sp.eye(n_t, k=-1)
    L11 = block_bidiagonal(I, -B1, n_t)
    L12 = sp.kron(sub, A1)
    L21 = sp.kron(sub, B2)
    L22 = block_bidiagonal(I, -A2, n_t)
    F1 = np.zeros(td.m * n_t)
    F2 = np.zeros(td.m * n_t)
    for n in range(n_t):
        bt = td.b_tilde(n)
        F1[n * td.m:(n + 1) * td.m] = (beta / 2) * (td.b(n) - td.c_tilde(n)) + (beta / 2) * ng * (A @ bt)
        F2[n * td.m:(n + 1) * td.m] = (beta / 2) * (td.c(n) - bt) - (beta / 2) * ng * (B @ bt)
    F1[: td.m] += B1 @ td.u0 - A1 @ td.v0
    F2[: td.m] += -(B2 @ td.u0) + A2 @ td.v0
    scaling = {}
    tag = "Telegraph-Relaxation"
    if rescaled:
        L11, L12, L21, L22, F1 = _rescale_u(L11, L12, L21, L22, F1, 1.0 / tau)
        scaling = {"u": 1.0 / tau}
        tag = "Telegraph-RelaxationRescaled"
    return _two_field(L11, L12, L21, L22, F1, F2, td, n_t, tag, scaling,
                      meta={"epsilon": td.eps, "tau": tau, "h": td.h, "beta": beta})


def penalty_matrix(td: TelegraphData) -> sp.csr_matrix:
    """I - beta_tilde L_h with beta_tilde = tau/h^2."""
    return sp.csr_matrix(sp.identity(td.m) - (td.tau / td.h**2) * td.Lh)


def penalized_blocks(td: TelegraphData):
    """(A1, A2, B1, B2, Bt) where B1 and B2 carry the dense factor Bt^{-1}."""
    A, B = imex_blocks(td)
    Bt = penalty_matrix(td)
    I = np.eye(td.m)
    Bt_dense = Bt.toarray()
    # strictly diagonally dominant, so this never fails for valid grids
    assert np.all(2 * np.abs(np.diag(Bt_dense)) > np.abs(Bt_dense).sum(axis=1)), "penalty matrix lost dominance"
    Bt_inv = np.linalg.solve(Bt_dense, I)
    ig, ng = td.inv_gamma, td.nu_over_gamma
    A1 = ig * A
    A2 = ig * B
    B1 = (Bt_dense - I + B.toarray() + ng * (A @ A).toarray()) @ Bt_inv
    B2 = (A.toarray() + ng * (B @ A).toarray()) @ Bt_inv
    return sp.csr_matrix(A1), sp.csr_matrix(A2), sp.csr_matrix(B1), sp.csr_matrix(B2), Bt


def build_penalized_system(config: ProblemConfig, exact=None) -> SpaceTimeSystem:
    """Penalized diffusive relaxation system (penalty weight 1).

    The inverse of the penalty matrix is formed densely here, since the explicit
    space-time matrix is needed for spectra; the marcher solves with it instead.
    """
    _check(config, Equation.TELEGRAPH)
    td = telegraph_data(config, exact)
    n_t, beta = config.n_t, td.beta
    bt_ratio = td.tau / td.h**2
    A, B = imex_blocks(td)
    A1, A2, B1, B2, _ = penalized_blocks(td)
    I = sp.identity(td.m, format="csr")
    ng = td.nu_over_gamma
    sub = sp.eye(n_t, k=-1)
    L11 = block_bidiagonal(I, -B1, n_t)
    L12 = sp.kron(sub, A1)
    L21 = sp.kron(sub, B2)
    L22 = block_bidiagonal(I, -A2, n_t)
    F1 = np.zeros(td.m * n_t)
    F2 = np.zeros(td.m * n_t)
    for n in range(n_t):
        b, bt = td.b(n), td.b_tilde(n)
        F1[n * td.m:(n + 1) * td.m] = (
            bt_ratio * (B1 @ b) + (beta / 2) * (b - td.c_tilde(n)) + (beta / 2) * ng * (A @ bt) - bt_ratio * b
        )
        F2[n * td.m:(n + 1) * td.m] = (
            -bt_ratio * (B2 @ b) - (beta / 2) * (bt - td.c(n)) - (beta / 2) * ng * (B @ bt)
        )
    F1[: td.m] += B1 @ td.u0 - A1 @ td.v0
    F2[: td.m] += -(B2 @ td.u0) + A2 @ td.v0
    return _two_field(L11, L12, L21, L22, F1, F2, td, n_t, "Telegraph-Penalized",
                      meta={"epsilon": td.eps, "tau": td.tau, "h": td.h, "beta": beta, "beta_tilde": bt_ratio})


def explicit_blocks(td: TelegraphData):
    I = sp.identity(td.m, format="csr")
    A = (td.beta / 2) * td.Mh
    B = I + (td.beta / (2 * math.sqrt(td.eps))) * td.Lh
    return sp.csr_matrix(A), sp.csr_matrix(B)


def build_explicit_multiscale_system(config: ProblemConfig, rescaled: bool = False, exact=None) -> SpaceTimeSystem:
    """Explicit multiscale system; ``rescaled`` solves for ``[U/sqrt(eps); V]``."""
    _check(config, Equation.TELEGRAPH)
    td = telegraph_data(config, exact)
    n_t, beta, tau, eps = config.n_t, td.beta, td.tau, td.eps
    se = math.sqrt(eps)
    A, B = explicit_blocks(td)
    I = sp.identity(td.m, format="csr")
    Bv = B - (tau / eps) * I
    sub = sp.eye(n_t, k=-1)
    L11 = block_bidiagonal(I, -B, n_t)
    L12 = sp.kron(sub, A)
    L21 = sp.kron(sub, A / eps)
    L22 = block_bidiagonal(I, -Bv, n_t)
    F1 = np.zeros(td.m * n_t)
    F2 = np.zeros(td.m * n_t)
    for n in range(n_t):
        F1[n * td.m:(n + 1) * td.m] = (beta / 2) * (td.b(n) / se - td.c_tilde(n))
        F2[n * td.m:(n + 1) * td.m] = (beta / 2) * (td.c(n) / se - td.b_tilde(n) / eps)
    F1[: td.m] += B @ td.u0 - A @ td.v0
    F2[: td.m] += -(A @ td.u0) / eps + Bv @ td.v0
    scaling = {}
    tag = "Telegraph-ExplicitMultiscale"
    if rescaled:
        L11, L12, L21, L22, F1 = _rescale_u(L11, L12, L21, L22, F1, 1.0 / se)
        scaling = {"u": 1.0 / se}
        tag = "Telegraph-ExplicitMultiscaleRescaled"
    return _two_field(L11, L12, L21, L22, F1, F2, td, n_t, tag, scaling,
                      meta={"epsilon": eps, "tau": tau, "h": td.h, "beta": beta})


# ---------------------------------------------------------------- dispatch and dilation


def assemble(config: ProblemConfig, **kwargs) -> SpaceTimeSystem:
    """Build the space-time system that matches ``config.scheme``."""
    s = config.scheme
    if config.equation == Equation.ODE:
        return ode_system(config)
    if config.equation == Equation.HEAT:
        return build_heat_system(config, **kwargs)
    if config.equation == Equation.HYPERBOLIC:
        return build_upwind_hyperbolic(config, **kwargs)
    if s == Scheme.IMEX:
        return build_imex_system(config, preconditioned=False, **kwargs)
    if s == Scheme.PRECONDITIONED_IMEX:
        return build_imex_system(config, preconditioned=True, **kwargs)
    if s == Scheme.RELAXATION:
        return build_relaxation_system(config, rescaled=False, **kwargs)
    if s == Scheme.RELAXATION_RESCALED:
        return build_relaxation_system(config, rescaled=True, **kwargs)
    if s == Scheme.PENALIZED:
        return build_penalized_system(config, **kwargs)
    if s == Scheme.EXPLICIT_MULTISCALE:
        return build_explicit_multiscale_system(config, rescaled=kwargs.pop("rescaled", False), **kwargs)
    raise ConfigError(f"unknown scheme {s!r}")


def hermitian_dilation(L) -> SparseMatrix:
    """``[[0, L], [L^T, 0]]``; its eigenvalues are plus/minus the singular values of L."""
    Lc = as_csr(L)
    if np.iscomplexobj(Lc.data):
        raise TypeError("expected a real matrix")
    return _bmat([[None, Lc], [Lc.T, None]])


def pad_history_state(system: SpaceTimeSystem) -> SpaceTimeSystem:
    """Append ``n_steps`` trivial steps ``x^{n+1} - x^n = 0`` to every field.

    The padded unknown stays field-major, ``[U_padded; V_padded]``, each field now
    holding ``2 n_steps`` blocks whose second half copies the final block.
    """
    m, nt, nf = system.block_size, system.n_steps, system.n_fields
    old = system.L.csr.tocoo()
    # old field-major index f*nt*m + n*m + i  ->  new f*2nt*m + n*m + i
    def remap(idx):
        f, rem = np.divmod(idx, nt * m)
        return f * 2 * nt * m + rem

    rows = [remap(old.row)]
    cols = [remap(old.col)]
    vals = [old.data]
    new_F = np.zeros(2 * nt * m * nf)
    new_F[remap(np.arange(system.order))] = system.F
    k = np.arange(m)
    for f in range(nf):
        for n in range(nt, 2 * nt):
            r = f * 2 * nt * m + n * m + k
            rows += [r, r]
            cols += [r, r - m]
            vals += [np.ones(m), -np.ones(m)]
    order = 2 * system.order
    L = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(order, order))
    meta = dict(system.meta, padded=True, unpadded_steps=nt)
    return SpaceTimeSystem(SparseMatrix(L), new_F, m, 2 * nt, system.scheme + "-Padded", nf,
                           dict(system.variable_scaling), meta)
