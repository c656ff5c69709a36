import numpy as np
import pytest

from qdiff.config import Equation, ProblemConfig, Scheme, telegraph_defaults


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def heat_config(theta=0.5, d=1, n_x=8, n_t=None, t_final=0.1, policy=True):
    from qdiff.config import apply_step_policy

    c = ProblemConfig(equation=Equation.HEAT, scheme=Scheme.THETA, theta=theta, d=d, n_x=n_x,
                      n_t=n_t or 1, t_final=t_final, domain_lo=0.0, domain_hi=1.0)
    return apply_step_policy(c) if policy and n_t is None else c


def upwind_config(d=1, n_x=8, n_t=None, t_final=0.5):
    c = ProblemConfig(equation=Equation.HYPERBOLIC, scheme=Scheme.UPWIND, d=d, n_x=n_x,
                      n_t=n_t or n_x * d, t_final=t_final, domain_lo=0.0, domain_hi=1.0)
    return c


def ode_config(a=1.0, theta=0.0, tau=0.5, n_t=2):
    return ProblemConfig(equation=Equation.ODE, scheme=Scheme.THETA, a=a, theta=theta, n_t=n_t, t_final=tau * n_t)


def telegraph(scheme="PreconditionedIMEX", **kw):
    return telegraph_defaults(scheme=Scheme(scheme), **kw)
