import numpy as np

from heatlab.env import EnvironmentField, EnvironmentSpec


def const_field(d, L, N, theta_mode="lambda"):
    spec = EnvironmentSpec(d=d, L=L, N=N, R_dep=2 * L / N,
                           theta_mode=theta_mode, tail_hi=4.0, tail_lo=4.0,
                           p=2.0, q=20.0, r=20.0, seed=0)
    ones = np.ones((N,) * d)
    a = np.stack([ones.copy() for _ in range(d)])
    return EnvironmentField(spec=spec, a=a, theta=ones.copy(),
                            lam=ones.copy(), Lam=ones.copy())
