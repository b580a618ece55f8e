import time

import numpy as np

from heatlab import bounds
from heatlab.env import EnvironmentSpec, generate_environment
from heatlab.heat import heat_kernel_column
from heatlab.operators import assemble_generator
from scratch_bounds_helpers import const_field

targets = [(0.5, 0.0), (0.0, 0.5), (0.35, 0.35)]
scales = (2, 4, 8)
L, N = 12.0, 96

floors = sorted({0.01 * (n * np.hypot(*x)) ** 2 for n in scales for x in targets})
times = set()
for f0 in floors:
    t = f0
    while t < 4.0:
        times.add(round(t, 12))
        t *= 2
times.add(4.0)
times = sorted(times)
print(f"{len(times)} times from {times[0]:.4g} to {times[-1]}")

for label, fld in [
    ("const", const_field(2, L, N)),
    ("random", generate_environment(EnvironmentSpec(
        d=2, L=L, N=N, R_dep=0.25, model="checkerboard", tail_hi=8.0,
        tail_lo=8.0, theta_mode="lambda", p=2.0, q=6.0, r=6.0, seed=5))),
]:
    gen = assemble_generator(fld)
    t0 = time.time()
    col = heat_kernel_column(gen, (N // 2, N // 2), times)
    lr = bounds.verify_long_range([col], [gen], scales, targets)
    print(f"{label} ({time.time()-t0:.1f}s): {lr.summary()}")
    print("   sup_by_n:", {k: round(v, 3) for k, v in lr.meta["sup_by_n"].items()},
          "non_increasing:", lr.meta["non_increasing"])

# negative control: inflate the kernel at the n=8 target near its floor
col2 = col
cell = tuple(int(c) % N for c in np.rint(np.array([N // 2, N // 2]) + 8 * np.array([0.5, 0.0]) / (L / N)))
idx = int(np.ravel_multi_index(cell, (N, N)))
i_t = int(np.argmin(np.abs(col2.times - 0.16)))
col2.data[i_t, idx] *= 1e12
lr2 = bounds.verify_long_range([col2], [gen], scales, targets)
print("corrupted:", lr2.passed, {k: round(v, 3) for k, v in lr2.meta["sup_by_n"].items()})
assert not lr2.passed
