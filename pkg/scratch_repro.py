import json
import time

from heatlab import reproduce
from heatlab.gridio import write_json


def run(label, fn, **kw):
    t0 = time.time()
    rep = fn(**kw)
    dt = time.time() - t0
    print(f"[{label}] {dt:.1f}s passed={rep['passed']}")
    return rep


g = run("gaussian-sanity N=256", reproduce.gaussian_sanity)
print("   max_rel_err:", round(g["max_rel_err"], 5), "mass:", g["mass_drift"])
gc = reproduce.gaussian_sanity(N=64, L=16.0, corrupt=True)
print("   corrupt fixture fails:", not gc["passed"])
assert not gc["passed"]

u = run("upper-d2 (3 seeds)", reproduce.upper_d2, seeds=(0, 1, 2))
for m, blk in u["modes"].items():
    print(f"   {m}: slope={blk['trend_slope']:.4f} oct={blk['octaves']:.1f} "
          f"c1={blk['constants']['c1']:.4g} gamma={blk['constants']['gamma']:.3f}")
print("   euclid c22:", round(u["euclidean"]["constants"]["c22"], 4),
      "cross:", u["cross_consistency"]["implication_holds"])

lo = run("lower-d2 (3 seeds)", reproduce.lower_d2, seeds=(0, 1, 2))
print("   c3:", round(lo["constants"]["c3"], 5), "c4:", round(lo["constants"]["c4"], 4),
      "stable:", lo["stable"])

lr = run("longrange-d2 (1 seed)", reproduce.longrange_d2, seeds=(5,))
print("   const sups:", {k: round(v, 2) for k, v in lr["constant"]["sup_by_n"].items()})
print("   ens sups  :", {k: round(v, 2) for k, v in lr["ensemble"]["sup_by_n"].items()})

mo = run("moments (M=100)", reproduce.moments, M=100)
print("   ratios:", [round(x, 4) for x in mo["ratios"]],
      "max/min:", round(mo["max_over_min"], 3), "ci:", mo["max_over_min_ci"])

gr = run("green-d3 (1 seed)", reproduce.green_d3, seeds=(0,))
print("   ctrl rel:", round(gr["constant_control"]["rel_sup"], 4))
for e in gr["ensemble"]:
    print("   seed", e["seed"], "e_n:", [round(x, 4) for x in e["e_n"]],
          "halving:", e["halving"])
print("   neg e_n:", [round(x, 4) for x in gr["negative_control"]["e_n"]],
      "neg passes:", gr["negative_control"]["passed"])

write_json("/tmp/rep_a.json", mo)
write_json("/tmp/rep_b.json", reproduce.moments(M=100))
assert open("/tmp/rep_a.json").read() == open("/tmp/rep_b.json").read()
print("moments report byte-identical across reruns")

try:
    reproduce.run_preset("nope")
except Exception as e:
    print("unknown preset ->", type(e).__name__)
try:
    reproduce.run_preset("gaussian-sanity", max_seconds=1e-6)
except Exception as e:
    print("guard ->", type(e).__name__)
