import numpy as np
import pytest

from heatlab.env import EnvironmentSpec, EnvironmentField, generate_environment


def make_spec(seed=0, d=2, N=16, L=None, theta_mode="lambda", **kw):
    """Small random-environment spec for fast tests (h = L/N = 0.25)."""
    if L is None:
        L = N / 4.0
    kw.setdefault("R_dep", 0.5)
    kw.setdefault("tail_hi", 8.0)
    kw.setdefault("tail_lo", 8.0)
    kw.setdefault("p", 2.0)
    kw.setdefault("q", 6.0)
    kw.setdefault("r", 6.0)
    return EnvironmentSpec(d=d, L=L, N=N, seed=seed, theta_mode=theta_mode, **kw)


def make_constant_field(d=2, N=16, L=4.0, theta_mode="unit"):
    """a = I, theta = 1 (or Lam) on a small torus, bypassing sampling."""
    spec = EnvironmentSpec(d=d, L=L, N=N, R_dep=2 * L / N,
                           theta_mode=theta_mode)
    ones = np.ones(spec.shape)
    return EnvironmentField(spec=spec, a=np.ones((d,) + spec.shape),
                            theta=ones.copy(), lam=ones.copy(),
                            Lam=ones.copy())


@pytest.fixture
def small_field():
    return generate_environment(make_spec(seed=1))


@pytest.fixture
def const_field():
    return make_constant_field()
