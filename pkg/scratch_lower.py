import math

import numpy as np

from heatlab import bounds, reproduce
from heatlab.geometry import euclidean_distance_grid
from heatlab.util import burn_in_scale

cases = [reproduce.d2_case(s, "lambda", with_metric=False) for s in (0, 1, 2)]
cols = [c["col"] for c in cases]
gens = [c["gen"] for c in cases]

d = 2
t_l, r_l, p_l = [], [], []
for col, gen in zip(cols, gens):
    eu = euclidean_distance_grid(gen.shape, col.source, gen.h).ravel()
    for t in col.times:
        if t <= 0:
            continue
        p = col.at(t)
        t_l.append(np.full(eu.size, t))
        r_l.append(eu)
        p_l.append(p)
t_all = np.concatenate(t_l); r_all = np.concatenate(r_l); p_all = np.concatenate(p_l)
ts = np.sort(np.unique(t_all))
near = r_all <= np.sqrt(t_all)
infs = []
for t in ts:
    m = near & (t_all == t)
    infs.append(np.log((p_all[m] * t).min()))
print("on-diag inf logs:", [round(x, 4) for x in infs])
burn = burn_in_scale(np.sqrt(ts), np.asarray(infs))
print("burn:", burn)

bf = bounds.verify_lower(cols, gens)
print(bf.summary())
print("meta:", {k: v for k, v in bf.meta.items() if k != "grids"})

# where do the infima sit?
burn = bf.burn_in
cone = t_all >= burn**2 * np.maximum(1.0, r_all)
tc, rc, pc = t_all[cone], r_all[cone], p_all[cone]
u = rc**2 / tc
v = np.log(pc) + (d / 2) * np.log(tc)
c4 = bf.constants["c4"]
w = v + c4 * u
jg = int(np.argmin(w))
print(f"global inf: w={w[jg]:.4f} at t={tc[jg]} r={rc[jg]:.3f} u={u[jg]:.2f}")
t_half = math.sqrt(tc.min() * tc.max())
top = tc >= t_half
jt = int(np.argmin(w[top]))
print(f"top-half inf: w={w[top][jt]:.4f} at t={tc[top][jt]} r={rc[top][jt]:.3f} "
      f"u={u[top][jt]:.2f} (t_half={t_half:.3f})")
for t in np.unique(tc):
    m = tc == t
    print(f"  t={t:5.2f}: inf w={w[m].min():8.4f} at u={u[m][np.argmin(w[m])]:6.2f} "
          f"max u={u[m].max():7.2f} n={m.sum()}")
