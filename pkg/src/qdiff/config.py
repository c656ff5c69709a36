"""Problem configurations, step-size policies and the manufactured telegraph solution."""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class Equation(str, enum.Enum):
    ODE = "ODE"
    HEAT = "Heat"
    HYPERBOLIC = "Hyperbolic"
    TELEGRAPH = "Telegraph"


class Scheme(str, enum.Enum):
    THETA = "Theta"
    UPWIND = "Upwind"
    IMEX = "IMEX"
    PRECONDITIONED_IMEX = "PreconditionedIMEX"
    RELAXATION = "Relaxation"
    RELAXATION_RESCALED = "RelaxationRescaled"
    PENALIZED = "Penalized"
    EXPLICIT_MULTISCALE = "ExplicitMultiscale"


LEGAL_PAIRS = {
    Equation.ODE: {Scheme.THETA},
    Equation.HEAT: {Scheme.THETA},
    Equation.HYPERBOLIC: {Scheme.UPWIND},
    Equation.TELEGRAPH: {
        Scheme.IMEX,
        Scheme.PRECONDITIONED_IMEX,
        Scheme.RELAXATION,
        Scheme.RELAXATION_RESCALED,
        Scheme.PENALIZED,
        Scheme.EXPLICIT_MULTISCALE,
    },
}

TELEGRAPH_SCHEMES = LEGAL_PAIRS[Equation.TELEGRAPH]

# relative slack on inequality checks so that exact boundary cases (tau/h^2 == 1/(4d)) pass
_RTOL = 1e-12


class ConfigError(ValueError):
    """Raised for malformed configurations (unknown keys, bad types, illegal values)."""


@dataclass(frozen=True)
class ProblemConfig:
    """One discretized problem.

    ``n_x`` counts spatial intervals per dimension and ``n_t`` time intervals, so
    ``h = (domain_hi - domain_lo) / n_x`` and ``tau = t_final / n_t``.
    """

    equation: Equation = Equation.HEAT
    scheme: Scheme = Scheme.THETA
    d: int = 1
    n_x: int = 8
    n_t: int = 8
    theta: float = 0.5
    a: float = 1.0
    epsilon: float = 1.0
    c_p: float = 0.5
    iota: float = 1.0
    delta: float = 0.5
    domain_lo: float = 0.0
    domain_hi: float = 1.0
    t_final: float = 1.0
    u0: float = 1.0
    penalized_step: str = "h"

    def __post_init__(self):
        object.__setattr__(self, "equation", Equation(self.equation))
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    @property
    def h(self) -> float:
        return (self.domain_hi - self.domain_lo) / self.n_x

    @property
    def tau(self) -> float:
        return self.t_final / self.n_t

    @property
    def beta(self) -> float:
        """tau/h, the hyperbolic mesh ratio."""
        return self.tau / self.h

    @property
    def beta_tilde(self) -> float:
        """tau/h^2, the parabolic mesh ratio."""
        return self.tau / self.h**2

    def replace(self, **changes) -> "ProblemConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["equation"] = self.equation.value
        out["scheme"] = self.scheme.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            return cls(**data)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ProblemConfig":
        with open(Path(path)) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(data)

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def telegraph_defaults(**changes) -> ProblemConfig:
    """Telegraph problem on [-1, 1] x [0, 1] (the multiscale experiments' domain)."""
    base = ProblemConfig(
        equation=Equation.TELEGRAPH,
        scheme=Scheme.PRECONDITIONED_IMEX,
        n_x=4,
        n_t=20,
        epsilon=1e-8,
        domain_lo=-1.0,
        domain_hi=1.0,
        t_final=1.0,
    )
    return base.replace(**changes)


def _le(x, bound):
    return x <= bound * (1 + _RTOL) + _RTOL * 1e-3


def validate_config(config: ProblemConfig) -> list[str]:
    """Return a list of violated invariants; empty iff the configuration is usable."""
    c = config
    out = []
    if c.scheme not in LEGAL_PAIRS[c.equation]:
        out.append(f"illegal pairing: scheme {c.scheme.value} with equation {c.equation.value}")
    if not (isinstance(c.d, (int, np.integer)) and c.d >= 1):
        out.append(f"dimension d must be an integer >= 1 (d={c.d})")
    if c.n_x < 1 or c.n_t < 1:
        out.append(f"n_x and n_t must be positive (n_x={c.n_x}, n_t={c.n_t})")
        return out
    if not c.domain_hi > c.domain_lo:
        out.append(f"h must be positive (domain=[{c.domain_lo}, {c.domain_hi}])")
    if not c.t_final > 0:
        out.append(f"tau must be positive (t_final={c.t_final})")
    if out:
        return out
    if not 0.0 <= c.theta <= 1.0:
        out.append(f"theta must lie in [0, 1] (theta={c.theta})")

    tau, h, d = c.tau, c.h, c.d
    if c.equation == Equation.ODE:
        if not c.a > 0:
            out.append(f"ODE decay constant must be positive (a={c.a})")
        elif c.theta < 1 and not tau < 1.0 / (c.a * (1 - c.theta)):
            out.append(f"ODE step condition tau < 1/(a(1-theta)) violated (tau={tau}, a={c.a}, theta={c.theta})")
    elif c.equation == Equation.HEAT:
        if c.n_x < 2:
            out.append(f"heat equation needs n_x >= 2 (n_x={c.n_x})")
        if c.theta == 0 and not _le(tau / h**2, 1.0 / (4 * d)):
            out.append(f"parabolic CFL tau/h^2 <= 1/(4d) violated (tau/h^2={tau / h**2}, d={d})")
        if c.theta == 0.5 and not _le(tau, 1.0 / (8 * d)):
            out.append(f"Crank-Nicolson step tau <= 1/(8d) violated (tau={tau}, d={d})")
    elif c.equation == Equation.HYPERBOLIC:
        if not _le(tau / h, 1.0 / d):
            out.append(f"hyperbolic CFL beta = tau/h <= 1/d violated (beta={tau / h}, d={d})")
    elif c.equation == Equation.TELEGRAPH:
        if d != 1:
            out.append(f"telegraph system is one-dimensional (d={d})")
        if c.n_x < 2:
            out.append(f"telegraph system needs n_x >= 2 (n_x={c.n_x})")
        eps_ok = c.epsilon >= 0 if c.scheme != Scheme.EXPLICIT_MULTISCALE else c.epsilon > 0
        if not eps_ok or c.epsilon > 1:
            out.append(f"epsilon out of range (epsilon={c.epsilon})")
        if c.epsilon == 0 and c.scheme == Scheme.IMEX:
            out.append("unpreconditioned IMEX needs epsilon > 0")
        if c.scheme == Scheme.EXPLICIT_MULTISCALE:
            lo, hi = 1 / math.sqrt(111), 2 / (2 + c.delta)
            if not c.delta <= 1 or not c.delta > 0:
                out.append(f"error bound delta must lie in (0, 1] (delta={c.delta})")
            if not (lo * (1 - _RTOL) <= c.c_p <= hi * (1 + _RTOL)):
                out.append(f"c_p range 1/sqrt(111) <= c_p <= 2/(2+delta) violated (c_p={c.c_p}, delta={c.delta})")
            if c.epsilon > 0:
                # effective constants after rounding n_x, n_t to integers
                if not _le(h, math.sqrt(c.epsilon) * c.delta):
                    out.append(f"mesh h <= sqrt(eps)*delta violated (h={h})")
                c_eff = tau / (math.sqrt(c.epsilon) * h)
                if not (lo * (1 - _RTOL) <= c_eff <= hi * (1 + _RTOL)):
                    out.append(f"effective c_p = tau/(sqrt(eps) h) out of range (c_p_eff={c_eff})")
    return out


def step_size_policy(config: ProblemConfig) -> tuple[float, float]:
    """Return ``(tau, h)`` coupled as the complexity theorems prescribe for each scheme.

    ``h`` is taken from the configured grid except for the explicit multiscale scheme,
    where ``h = sqrt(eps) * delta``.
    """
    c = config
    h = c.h
    s = c.scheme
    if s == Scheme.THETA and c.equation == Equation.HEAT:
        if c.theta == 0:
            return h**2 / (4 * c.d), h
        if c.theta == 0.5:
            return h / (8 * c.d), h
        return h / (8 * c.d), h
    if s == Scheme.THETA and c.equation == Equation.ODE:
        return c.tau, h
    if s == Scheme.UPWIND:
        return h / c.d, h
    if s in (Scheme.IMEX, Scheme.PRECONDITIONED_IMEX, Scheme.RELAXATION, Scheme.RELAXATION_RESCALED):
        return c.iota * h**2, h
    if s == Scheme.PENALIZED:
        if c.penalized_step == "h":
            return h, h
        if c.penalized_step == "h2":
            return h**2, h
        raise ConfigError(f"penalized_step must be 'h' or 'h2', got {c.penalized_step!r}")
    if s == Scheme.EXPLICIT_MULTISCALE:
        h = math.sqrt(c.epsilon) * c.delta
        return c.c_p * math.sqrt(c.epsilon) * h, h
    raise ConfigError(f"unknown scheme {s!r}")


def apply_step_policy(config: ProblemConfig) -> ProblemConfig:
    """Round the policy's (tau, h) to an integer grid on the configured domain and horizon.

    ``n_x`` and ``n_t`` are rounded up, so the realized steps never exceed the policy's.
    For schemes whose ``h`` comes from the grid, ``n_x`` is kept.
    """
    tau, h = step_size_policy(config)
    length = config.domain_hi - config.domain_lo
    n_x = config.n_x
    if config.scheme == Scheme.EXPLICIT_MULTISCALE:
        n_x = max(2, math.ceil(length / h * (1 - 1e-12)))
        h_real = length / n_x
        tau = config.c_p * math.sqrt(config.epsilon) * h_real
    n_t = max(1, math.ceil(config.t_final / tau * (1 - 1e-12)))
    return config.replace(n_x=n_x, n_t=n_t)


def manufactured_telegraph(x, t, eps):
    """Exact telegraph solution ``u = e^{at} sin(ax)``, ``v = e^{at} cos(ax)``, ``a = -1/(1+eps)``."""
    if np.any(np.asarray(eps) < 0):
        raise ValueError("epsilon must be nonnegative")
    a = -1.0 / (1.0 + np.asarray(eps, dtype=float))
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    g = np.exp(a * t)
    return g * np.sin(a * x), g * np.cos(a * x)


def telegraph_residual(x, t, eps):
    """Residuals of ``u_t + v_x = 0`` and ``eps v_t + u_x + v = 0`` using exact derivatives."""
    a = -1.0 / (1.0 + eps)
    g = math.exp(a * t)
    u_t = a * g * math.sin(a * x)
    v_t = a * g * math.cos(a * x)
    u_x = a * g * math.cos(a * x)
    v_x = -a * g * math.sin(a * x)
    v = g * math.cos(a * x)
    return u_t + v_x, eps * v_t + u_x + v


def heat_exact(points: np.ndarray, t: float, d: int) -> np.ndarray:
    """``exp(-d pi^2 t) prod sin(pi x_k)`` on the unit cube; ``points`` has shape (..., d)."""
    return math.exp(-d * math.pi**2 * t) * np.prod(np.sin(math.pi * points), axis=-1)


def interior_nodes(config: ProblemConfig) -> np.ndarray:
    """The n_x - 1 interior nodes of the 1-D grid."""
    return config.domain_lo + config.h * np.arange(1, config.n_x)
