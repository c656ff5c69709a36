"""Ideal statevector model of HHL on a real symmetric matrix.

Register order, most significant first: clock (n_t qubits), system (n_s
qubits), ancilla (1 qubit).  Phase estimation is modelled exactly through the
eigendecomposition of H and the finite-register kernel, so the output equals
what a noiseless gate-level circuit would produce.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from .assembler import pad_history_state  # noqa: F401  re-exported
from .sparse import as_csr

STATEVECTOR_CAP = 1024
UNITARY_TOL = 1e-12
ZERO_MASS = 1e-12


class HHLError(ValueError):
    """Contract violation in the quantum solver (bad input or degenerate t0)."""


@dataclass
class HHLParams:
    n_t: int
    t_0: float
    C_t: float
    p: int
    lambda_max_estimate: float
    rotation_constant: float | None = None
    rationale: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def choose_evolution_time(lambda_max: float, n_t: int) -> HHLParams:
    """t0 = 2*pi*C_t / 2**n_t with C_t = 10**p, p = floor(log10(2**(n_t-1) / lambda_max))."""
    if not lambda_max > 0:
        raise HHLError("lambda_max must be positive")
    if n_t < 2:
        raise HHLError("need at least two clock qubits")
    p = math.floor(math.log10(2 ** (n_t - 1) / lambda_max))
    c_t = 10.0**p
    t0 = 2 * math.pi * c_t / 2**n_t
    if lambda_max * t0 > math.pi * (1 + 1e-12):
        raise HHLError(f"|lambda|max * t0 = {lambda_max * t0:.6g} exceeds pi (p = {p})")
    why = f"C_t = 1e{p} moves the integer part of lambda*C_t into {n_t} clock bits"
    return HHLParams(n_t=n_t, t_0=t0, C_t=c_t, p=p, lambda_max_estimate=float(lambda_max), rationale=why)


@dataclass
class QuantumState:
    amplitudes: np.ndarray
    n_clock: int
    n_system: int
    n_ancilla: int = 1
    order: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        n = self.n_clock + self.n_system + self.n_ancilla
        if self.amplitudes.size != 2**n:
            raise ValueError(f"expected {2 ** n} amplitudes, got {self.amplitudes.size}")
        if self.order is None:
            self.order = 2**self.n_system

    @classmethod
    def from_system_vector(cls, x, n_system: int | None = None, meta=None) -> "QuantumState":
        """System-only state (no clock, no ancilla) holding x / |x|."""
        x = np.asarray(x, dtype=complex).ravel()
        nrm = np.linalg.norm(x)
        if nrm == 0:
            raise HHLError("zero vector has no state")
        n_s = n_system if n_system is not None else max(1, math.ceil(math.log2(x.size)))
        amp = np.zeros(2**n_s, dtype=complex)
        amp[: x.size] = x / nrm
        return cls(amp, 0, n_s, 0, order=x.size, meta=dict(meta or {}))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(2**self.n_clock, 2**self.n_system, 2**self.n_ancilla)

    def system_density(self) -> np.ndarray:
        t = self.tensor()
        return np.einsum("csa,cta->st", t, t.conj())

    def system_vector(self) -> np.ndarray:
        """System amplitudes when clock and ancilla factor out, else the dominant eigenvector."""
        t = self.tensor()
        weights = np.einsum("csa->ca", np.abs(t) ** 2)
        c, a = np.unravel_index(np.argmax(weights), weights.shape)
        if abs(weights.sum() - weights[c, a]) <= UNITARY_TOL:
            return t[c, :, a].copy()
        w, v = np.linalg.eigh(self.system_density())
        return v[:, -1] * np.sqrt(w[-1])

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.system_density()))[: self.order]

    def dump(self, path) -> None:
        """JSON header line, then little-endian float64 (re, im) pairs."""
        header = {
            "n_t": self.n_clock,
            "n_s": self.n_system,
            "n_ancilla": self.n_ancilla,
            "order": self.order,
            "count": int(self.amplitudes.size),
            "dtype": "<f8",
            "params": self.meta.get("params"),
        }
        body = np.empty((self.amplitudes.size, 2), dtype="<f8")
        body[:, 0] = self.amplitudes.real
        body[:, 1] = self.amplitudes.imag
        with open(Path(path), "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
            fh.write(body.tobytes())

    @classmethod
    def load(cls, path) -> "QuantumState":
        raw = Path(path).read_bytes()
        cut = raw.index(b"\n")
        header = json.loads(raw[:cut])
        body = np.frombuffer(raw[cut + 1 :], dtype="<f8").reshape(-1, 2)
        amp = body[:, 0] + 1j * body[:, 1]
        return cls(amp, header["n_t"], header["n_s"], header["n_ancilla"], order=header["order"],
                   meta={"params": header.get("params")})

    def probabilities_csv(self, path, block_size: int, offset: int = 0) -> None:
        """|amplitude|^2 laid out by (step, site) for history-state overlays."""
        prob = self.probabilities()[offset:]
        n_steps = prob.size // block_size
        lines = ["step,site,probability"]
        for n in range(n_steps):
            for j in range(block_size):
                lines.append(f"{n},{j},{prob[n * block_size + j]!r}")
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class QuantumRunResult:
    output_state: QuantumState
    success_probability: float
    fidelity: float | None
    params: HHLParams
    decay_g: float | None = None
    checks: dict = field(default_factory=dict)

    @property
    def solution_direction(self) -> np.ndarray:
        return self.output_state.system_vector()[: self.output_state.order]


def fidelity(state, reference) -> float:
    """|<r|x>| for the system register, r normalized; mixed states use sqrt(<r|rho|r>)."""
    ref = np.asarray(reference, dtype=complex).ravel()
    nrm = np.linalg.norm(ref)
    if nrm == 0:
        raise HHLError("reference vector is zero")
    if isinstance(state, QuantumState):
        rho = state.system_density()
        r = np.zeros(rho.shape[0], dtype=complex)
        r[: ref.size] = ref / nrm
        val = float(np.real(r.conj() @ rho @ r))
        return float(min(1.0, math.sqrt(max(val, 0.0))))
    x = np.asarray(state, dtype=complex).ravel()
    xn = np.linalg.norm(x)
    if xn == 0:
        raise HHLError("state vector is zero")
    r = np.zeros(max(x.size, ref.size), dtype=complex)
    r[: ref.size] = ref / nrm
    return float(min(1.0, abs(np.vdot(r[: x.size], x / xn))))


def decode_eigenvalues(n_t: int, t0: float) -> np.ndarray:
    """Clock value v -> lambda; phases v/2**n_t >= 1/2 decode negative."""
    T = 2**n_t
    phi = np.arange(T) / T
    return np.where(phi < 0.5, 2 * np.pi * phi / t0, 2 * np.pi * (phi - 1) / t0)


def qpe_kernel(phases: np.ndarray, n_t: int) -> np.ndarray:
    """Clock amplitudes after ideal QPE, one row per eigenphase (rows have unit norm)."""
    T = 2**n_t
    x = np.arange(T)
    return np.fft.fft(np.exp(2j * np.pi * np.outer(phases, x)), axis=1) / T


def _uncompute(kernel_rows: np.ndarray, phases: np.ndarray, n_t: int) -> np.ndarray:
    """Apply the inverse of QPE (inverse kernel, then Hadamards) to clock vectors."""
    T = 2**n_t
    x = np.arange(T)
    w = np.fft.ifft(kernel_rows, axis=1) * np.sqrt(T)
    w *= np.exp(-2j * np.pi * np.outer(phases, x))
    return (w @ sla.hadamard(T)) / np.sqrt(T)


def hhl_solve(H, b, params: HHLParams, reference=None, check: bool = True) -> QuantumRunResult:
    """Simulate HHL for H x = b; post-select ancilla = 1 with the clock back at zero.

    The reference for the fidelity defaults to the exact H^{-1} b.
    """
    H = np.asarray(as_csr(H).toarray() if not isinstance(H, np.ndarray) else H, dtype=float)
    n = H.shape[0]
    if H.shape != (n, n):
        raise HHLError("H must be square")
    if not np.allclose(H, H.T, rtol=0, atol=1e-14 * max(1.0, np.abs(H).max())):
        raise HHLError("H must be symmetric")
    n_s = max(1, math.ceil(math.log2(n)))
    if 2**n_s > STATEVECTOR_CAP:
        raise HHLError(f"order {n} exceeds the statevector cap {STATEVECTOR_CAP}")
    b = np.asarray(b, dtype=float).ravel()
    if b.size != n or not np.any(b):
        raise HHLError("b must be a nonzero vector of matching length")

    n_t, t0 = params.n_t, params.t_0
    T = 2**n_t
    lam, V = np.linalg.eigh(H)
    beta = V.T @ (b / np.linalg.norm(b))
    phases = lam * t0 / (2 * np.pi)
    live = np.abs(beta) > ZERO_MASS
    near = np.mod(np.rint(phases * T), T)
    if np.any(live & (near == 0)):
        raise HHLError("an eigenvalue decodes to the zero clock state; t0 is degenerate for this H")

    kern = qpe_kernel(phases, n_t)
    decoded = decode_eigenvalues(n_t, t0)
    clock_mass = (np.abs(beta) ** 2) @ (np.abs(kern) ** 2)
    usable = (clock_mass > ZERO_MASS) & (decoded != 0)
    C = float(np.min(np.abs(decoded[usable])))
    params.rotation_constant = C
    ratio = np.zeros(T)
    ratio[decoded != 0] = C / decoded[decoded != 0]

    # clock 0 amplitude after uncompute: sum_v |k_v|^2 C / lambda_v per eigencomponent
    coef = beta * ((np.abs(kern) ** 2) @ ratio)
    x_unnorm = V @ coef
    success = float(np.sum(np.abs(coef) ** 2))
    if success <= 0:
        raise HHLError("post-selection probability is zero")

    checks = {}
    if check:
        checks = _unitarity_checks(beta, kern, ratio, phases, n_t, success)

    amps = np.zeros((1, 2**n_s), dtype=complex)
    amps[0, :n] = x_unnorm / math.sqrt(success)
    full = np.zeros((T, 2**n_s, 2), dtype=complex)
    full[0, :, 1] = amps[0]
    out = QuantumState(full.ravel(), n_t, n_s, 1, order=n, meta={"params": params.to_dict()})
    if np.any(np.abs(full[0, n:, 1]) > 0):
        raise HHLError("padded system amplitudes leaked")

    ref = np.linalg.solve(H, b) if reference is None else reference
    fid = fidelity(out, ref)
    return QuantumRunResult(out, success, fid, params, checks=checks)


def _unitarity_checks(beta, kern, ratio, phases, n_t, success) -> dict:
    w = np.abs(beta) ** 2
    after_qpe = float(np.sum(w * np.sum(np.abs(kern) ** 2, axis=1)))
    one = kern * ratio
    zero = kern * np.sqrt(np.clip(1 - ratio**2, 0, None))
    u1 = _uncompute(one, phases, n_t)
    u0 = _uncompute(zero, phases, n_t)
    after_unc = float(np.sum(w[:, None] * (np.abs(u1) ** 2 + np.abs(u0) ** 2)))
    kept = float(np.sum(np.abs(beta * u1[:, 0]) ** 2))
    discarded = after_unc - kept
    out = {
        "norm_after_qpe": after_qpe,
        "norm_after_uncompute": after_unc,
        "kept_mass": kept,
        "discarded_mass": discarded,
    }
    if abs(after_qpe - 1) > UNITARY_TOL or abs(after_unc - 1) > UNITARY_TOL:
        raise HHLError(f"unitarity violated: {out}")
    if abs(kept - success) > UNITARY_TOL or abs(success + discarded - 1) > UNITARY_TOL:
        raise HHLError(f"post-selection mass accounting failed: {out}")
    return out


def required_samples(variance: float, precision: float, confidence: float) -> int:
    """Chebyshev count n >= Var / ((1 - p) eps^2)."""
    if not 0 < confidence < 1 or precision <= 0 or variance < 0:
        raise ValueError("need 0 < confidence < 1, precision > 0, variance >= 0")
    return int(math.ceil(variance / ((1 - confidence) * precision**2) - 1e-9))


def observable_expectation(state: QuantumState, site: int, step: int, block_size: int,
                           offset: int = 0, normalization: float | None = None):
    """Scaled probability of basis state (step, site) and a sample-count helper.

    ``normalization`` defaults to ``state.meta['normalization']`` (1 if absent); for a
    history state it carries N_t * |u0|^2, or 2 * |u0|^2 after padding.
    """
    if not 0 <= site < block_size:
        raise IndexError("site out of range")
    idx = offset + step * block_size + site
    if step < 0 or idx >= state.order:
        raise IndexError("step out of range")
    norm = state.meta.get("normalization", 1.0) if normalization is None else normalization
    value = norm * float(state.probabilities()[idx])
    return value, required_samples


def history_normalization(system, padded: bool, u0_norm_sq: float) -> float:
    n_t = system.meta.get("unpadded_steps", system.n_steps)
    return (2.0 if padded else float(n_t)) * u0_norm_sq


def decay_factor_g(history) -> float:
    """max_n |state_n| / |state_final| over a discrete history."""
    states = history.history if hasattr(history, "history") else list(history)
    norms = np.array([np.linalg.norm(s) for s in states])
    if norms[-1] == 0:
        raise HHLError("final state is zero")
    return float(norms.max() / norms[-1])


def solve_dilated(system, n_t: int = 10, lambda_max: float | None = None, check: bool = True) -> QuantumRunResult:
    """Run HHL on the Hermitian dilation of a space-time system and compare to the direct solve."""
    from .assembler import hermitian_dilation
    from .solvers import solve_spacetime_direct

    H = hermitian_dilation(system.L).toarray()
    N = system.order
    rhs = np.concatenate([system.F, np.zeros(N)])
    if lambda_max is None:
        lambda_max = float(np.max(np.abs(np.linalg.eigvalsh(H))))
    params = choose_evolution_time(lambda_max, n_t)
    S = solve_spacetime_direct(system)
    ref = np.concatenate([np.zeros(N), S])
    return hhl_solve(H, rhs, params, reference=ref, check=check)
