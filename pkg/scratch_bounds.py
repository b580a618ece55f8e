import math
import time

import numpy as np

from heatlab import bounds
from heatlab.env import EnvironmentField, EnvironmentSpec, generate_environment
from heatlab.geometry import euclidean_distance_grid
from heatlab.heat import KernelColumn, heat_kernel_column
from heatlab.metric import MetricField, intrinsic_distance_map
from heatlab.operators import assemble_generator


def const_field(d, L, N, theta_mode="lambda"):
    spec = EnvironmentSpec(d=d, L=L, N=N, R_dep=2 * L / N,
                           theta_mode=theta_mode, tail_hi=4.0, tail_lo=4.0,
                           p=2.0, q=20.0, r=20.0, seed=0)
    ones = np.ones((N,) * d)
    a = np.stack([ones.copy() for _ in range(d)])
    return EnvironmentField(spec=spec, a=a, theta=ones.copy(),
                            lam=ones.copy(), Lam=ones.copy())


# --- 1) synthetic continuum-Gaussian oracle: fitters must recover 1/4, 1/(4pi)
d, L, N = 2, 16.0, 64
f = const_field(d, L, N)
gen = assemble_generator(f)
src = (N // 2, N // 2)
h = L / N
eu = euclidean_distance_grid(f.shape, src, h).ravel()
times = np.array([0.25, 0.5, 1.0, 2.0, 4.0])
data = np.stack([(4 * math.pi * t) ** (-d / 2) * np.exp(-eu**2 / (4 * t))
                 for t in times])
col = KernelColumn(source=src, times=times, data=data, shape=f.shape)

up = bounds.verify_upper_euclidean([col], [gen])
print("euclid:", up.summary())
assert abs(up.constants["c22"] - 0.25) < 1e-9, up.constants
assert abs(up.constants["c21"] - 1 / (4 * math.pi)) < 1e-12
assert up.passed

lo = bounds.verify_lower([col], [gen])
print("lower :", lo.summary())
assert abs(lo.constants["c4"] - 0.25) < 1e-9, lo.constants
assert abs(lo.constants["c3"] - 1 / (4 * math.pi)) < 1e-12, lo.constants
assert lo.passed

met = MetricField(source=src, dist=eu.reshape(f.shape).copy(),
                  neighborhood=16, h=h, theta_mode="lambda")
ui = bounds.verify_upper_intrinsic([col], [met], [gen])
print("intrin:", ui.summary(), ui.meta["trend_slope"])
assert abs(ui.constants["c1"] - 1 / (4 * math.pi)) < 1e-10, ui.constants
assert ui.passed

# mismatched source must raise
try:
    bad = MetricField(source=(0, 0), dist=eu.reshape(f.shape), neighborhood=16,
                      h=h, theta_mode="lambda")
    bounds.verify_upper_intrinsic([col], [bad], [gen])
    raise SystemExit("pairing check failed to fire")
except Exception as e:
    print("pairing guard:", type(e).__name__)

# --- 2) real constant-env columns
t0 = time.time()
rcol = heat_kernel_column(gen, src, times, tol=1e-8)
print(f"column time {time.time()-t0:.1f}s undershoot={rcol.meta}")
up2 = bounds.verify_upper_euclidean([rcol], [gen])
lo2 = bounds.verify_lower([rcol], [gen])
print("real euclid:", up2.summary())
print("real lower :", lo2.summary())
met2 = intrinsic_distance_map(f, src)
mf2 = met2 if isinstance(met2, MetricField) else met2
ui2 = bounds.verify_upper_intrinsic([rcol], [mf2], [gen])
print("real intrin:", ui2.summary(), "slope", ui2.meta["trend_slope"])

nd = bounds.near_diagonal_floor(rcol, gen, 1.0)
print("floor:", {k: (round(v, 4) if isinstance(v, float) else v) for k, v in nd.items()})
assert nd["passed"]

# --- 3) random environment end-to-end
spec = EnvironmentSpec(d=2, L=16.0, N=64, R_dep=0.5, model="checkerboard",
                       tail_hi=8.0, tail_lo=8.0, theta_mode="lambda",
                       p=2.0, q=6.0, r=6.0, seed=3)
fr = generate_environment(spec)
genr = assemble_generator(fr)
t0 = time.time()
colr = heat_kernel_column(genr, src, times, tol=1e-8)
metr = intrinsic_distance_map(fr, src)
uir = bounds.verify_upper_intrinsic([colr], [metr], [genr])
lor = bounds.verify_lower([colr], [genr])
print(f"random env ({time.time()-t0:.1f}s):")
print("  intrin:", uir.summary(), "slope", uir.meta["trend_slope"])
print("  lower :", lor.summary())
ndr = bounds.near_diagonal_floor(colr, genr, 1.0)
print("  floor margin:", round(ndr["margin"], 3), ndr["passed"])

# --- 4) sobolev + maximal probes on the random env
rng = np.random.default_rng(0)
xs = [np.linspace(0, 2 * np.pi, N, endpoint=False)] * 2
X, Y = np.meshgrid(*xs, indexing="ij")
trials = []
for _ in range(20):
    k1, k2 = rng.integers(1, 4, size=2)
    ph = rng.uniform(0, 2 * np.pi, size=2)
    trials.append(np.cos(k1 * X + ph[0]) * np.cos(k2 * Y + ph[1]) + rng.normal())
sb = bounds.sobolev_probe(genr, src, 4.0, trials)
print("sobolev rho=", round(sb["rho"], 4), "sup_ratio=", round(sb["sup_ratio"], 4),
      sb["passed"])

psi = 0.3 * np.sin(X) * np.cos(Y)
t0 = time.time()
mx = bounds.maximal_inequality_probe(genr, psi, n=3.0)
print(f"maximal ({time.time()-t0:.1f}s): ratio={mx['ratio']:.4g} "
      f"kappa={mx['kappa']:.3g} A={mx['A_n']:.3g} h2={mx['h_psi_sq']:.3g}")

cc = bounds.cross_consistency(uir, up2)
print("cross:", cc)
