"""Pinned end-to-end suites with fixed seeds and sizes.

Each preset builds its environments, runs the relevant harnesses, and returns
a JSON-ready report with a top-level "passed".  The acceptance tests call the
same builders, so the CLI `reproduce` command and the test suite can never
drift apart.  Reports contain no timestamps; identical runs give identical
bytes.
"""

from __future__ import annotations

import math
import time

import numpy as np

from . import bounds, stochastics
from .env import EnvironmentField, EnvironmentSpec, generate_environment
from .errors import ConfigurationError, ResourceGuardError
from .geometry import euclidean_distance_grid
from .green import green_function, scaling_limit_experiment
from .heat import heat_kernel_column
from .metric import intrinsic_distance_map
from .operators import assemble_generator

PRESET_NAMES = ("gaussian-sanity", "upper-d2", "lower-d2", "longrange-d2",
                "moments", "green-d3")

# shared 2d ensemble: one box, twenty seeds, dyadic times over five octaves
D2 = dict(L=16.0, N=64, R_dep=0.5, tail_hi=8.0, tail_lo=8.0,
          p=2.0, q=6.0, r=6.0)
D2_TIMES = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
D2_SOURCE = (32, 32)
D2_SEEDS = tuple(range(20))

LR = dict(L=12.0, N=96, scales=(2, 4, 8),
          targets=((0.5, 0.0), (0.0, 0.5), (0.35, 0.35)))

G3 = dict(L=12.0, N=96, scales=(4, 8, 16), seeds=(0, 1, 2, 3, 4))


class TimeGuard:
    """Raises ResourceGuardError when a wall-clock budget is exhausted."""

    def __init__(self, max_seconds: float | None):
        self.max_seconds = max_seconds
        self.start = time.monotonic()

    def check(self, stage: str) -> None:
        if self.max_seconds is None:
            return
        used = time.monotonic() - self.start
        if used > self.max_seconds:
            raise ResourceGuardError(
                f"wall-clock cap {self.max_seconds:.0f}s exceeded after "
                f"{used:.0f}s at stage {stage!r}")


def constant_environment(d: int, L: float, N: int,
                         theta_mode: str = "unit") -> EnvironmentField:
    spec = EnvironmentSpec(d=d, L=L, N=N, R_dep=2 * L / N,
                           theta_mode=theta_mode, seed=0)
    return generate_environment(spec)


def d2_spec(seed: int, theta_mode: str) -> EnvironmentSpec:
    return EnvironmentSpec(d=2, L=D2["L"], N=D2["N"], R_dep=D2["R_dep"],
                           model="checkerboard", tail_hi=D2["tail_hi"],
                           tail_lo=D2["tail_lo"], theta_mode=theta_mode,
                           p=D2["p"], q=D2["q"], r=D2["r"], seed=seed)


def d2_case(seed: int, theta_mode: str, with_metric: bool = True,
            times=D2_TIMES) -> dict:
    """Environment + generator + kernel column (+ intrinsic map) for one seed."""
    field = generate_environment(d2_spec(seed, theta_mode))
    gen = assemble_generator(field)
    col = heat_kernel_column(gen, D2_SOURCE, times)
    out = {"field": field, "gen": gen, "col": col}
    if with_metric:
        out["met"] = intrinsic_distance_map(field, D2_SOURCE)
    return out


# ---------------------------------------------------------------------------
# Presets

def gaussian_sanity(N: int = 256, L: float = 32.0, corrupt: bool = False,
                    guard: TimeGuard | None = None) -> dict:
    """Constant-coefficient kernel vs (4 pi t)^{-1} exp(-r^2/4t), r <= 3 sqrt(t)."""
    field = constant_environment(2, L, N)
    gen = assemble_generator(field)
    src = (N // 2, N // 2)
    times = (0.5, 1.0, 2.0, 4.0)
    col = heat_kernel_column(gen, src, times)
    if guard is not None:
        guard.check("kernel")
    r = euclidean_distance_grid(field.shape, src, field.h).ravel()
    worst, per_t = 0.0, []
    for t in times:
        p = col.at(t)
        if corrupt:
            p = p * 1.05
        mask = r <= 3 * math.sqrt(t)
        ref = (4 * math.pi * t) ** (-1.0) * np.exp(-r[mask] ** 2 / (4 * t))
        rel = float(np.abs((p[mask] - ref) / ref).max())
        per_t.append({"t": t, "max_rel_err": rel, "cells": int(mask.sum())})
        worst = max(worst, rel)
    return {
        "preset": "gaussian-sanity",
        "N": N, "L": L, "times": list(times),
        "per_time": per_t,
        "max_rel_err": worst,
        "tolerance": 0.02,
        "mass_drift": float(max(abs(m - 1.0) for m in col.meta["masses"])),
        "passed": bool(worst <= 0.02),
    }


def _fit_block(bf: bounds.BoundFit) -> dict:
    octaves = math.log2(bf.t_range[1] / bf.t_range[0]) if bf.t_range[0] > 0 else 0.0
    return {
        "constants": bf.constants,
        "t_range": list(bf.t_range),
        "worst_log_ratio": bf.worst_log_ratio,
        "burn_in": bf.burn_in,
        "octaves": octaves,
        "trend_slope": bf.meta.get("trend_slope"),
        "passed": bf.passed,
        "seeds": bf.meta.get("seeds"),
    }


def upper_d2(seeds=D2_SEEDS, guard: TimeGuard | None = None) -> dict:
    """Intrinsic-form upper bound over both speed-measure modes, pooled fits."""
    report = {"preset": "upper-d2", "modes": {}}
    euclid_fit = None
    for mode in ("lambda", "unit"):
        cols, mets, gens = [], [], []
        for s in seeds:
            case = d2_case(s, mode)
            cols.append(case["col"])
            mets.append(case["met"])
            gens.append(case["gen"])
            if guard is not None:
                guard.check(f"{mode}/seed{s}")
        bf = bounds.verify_upper_intrinsic(cols, mets, gens)
        blk = _fit_block(bf)
        blk["octave_ok"] = blk["octaves"] >= 3.0
        report["modes"][mode] = blk
        if mode == "lambda":
            euclid_fit = bounds.verify_upper_euclidean(cols, gens)
            report["euclidean"] = _fit_block(euclid_fit)
            report["cross_consistency"] = bounds.cross_consistency(bf, euclid_fit)
    report["passed"] = bool(
        all(m["passed"] and m["octave_ok"] for m in report["modes"].values())
        and report["cross_consistency"]["implication_holds"])
    return report


def lower_d2(seeds=D2_SEEDS, guard: TimeGuard | None = None) -> dict:
    """Near/off-diagonal lower bound at theta = Lambda on the admissible cone."""
    cols, gens = [], []
    for s in seeds:
        case = d2_case(s, "lambda", with_metric=False)
        cols.append(case["col"])
        gens.append(case["gen"])
        if guard is not None:
            guard.check(f"seed{s}")
    bf = bounds.verify_lower(cols, gens)
    blk = _fit_block(bf)
    blk.update({
        "preset": "lower-d2",
        "c3_top_half": bf.meta.get("c3_top_half"),
        "stable": bf.meta.get("stable"),
        "cone_samples": bf.meta.get("cone_samples"),
    })
    return blk


def _longrange_times(scales, targets, t_max: float = 4.0) -> list:
    floors = sorted({0.01 * (n * math.hypot(*x)) ** 2
                     for n in scales for x in targets})
    times = set()
    for f0 in floors:
        t = f0
        while t < t_max:
            times.add(round(t, 12))
            t *= 2
    times.add(t_max)
    return sorted(times)


def longrange_d2(seeds=(5, 6, 7), guard: TimeGuard | None = None) -> dict:
    """Fixed-exponent long-range bound; constant control plus a small ensemble."""
    scales, targets = LR["scales"], LR["targets"]
    times = _longrange_times(scales, targets)
    src = (LR["N"] // 2, LR["N"] // 2)

    def one(field):
        gen = assemble_generator(field)
        col = heat_kernel_column(gen, src, times)
        return col, gen

    const_col, const_gen = one(constant_environment(2, LR["L"], LR["N"],
                                                    theta_mode="lambda"))
    const_fit = bounds.verify_long_range([const_col], [const_gen], scales, targets)
    if guard is not None:
        guard.check("constant control")
    cols, gens = [], []
    for s in seeds:
        spec = EnvironmentSpec(d=2, L=LR["L"], N=LR["N"], R_dep=0.25,
                               model="checkerboard", tail_hi=8.0, tail_lo=8.0,
                               theta_mode="lambda", p=2.0, q=6.0, r=6.0, seed=s)
        c, g = one(generate_environment(spec))
        cols.append(c)
        gens.append(g)
        if guard is not None:
            guard.check(f"seed{s}")
    ens_fit = bounds.verify_long_range(cols, gens, scales, targets)
    return {
        "preset": "longrange-d2",
        "times": times,
        "scales": list(scales),
        "targets": [list(x) for x in targets],
        "constant": {"c23": const_fit.constants["c23"],
                     "sup_by_n": const_fit.meta["sup_by_n"],
                     "passed": const_fit.passed},
        "ensemble": {"c23": ens_fit.constants["c23"],
                     "sup_by_n": ens_fit.meta["sup_by_n"],
                     "seeds": list(seeds),
                     "passed": ens_fit.passed},
        "passed": bool(const_fit.passed and ens_fit.passed),
    }


def moments(M: int = 2000, guard: TimeGuard | None = None) -> dict:
    """Ball-average concentration: (2 xi)-moments against K^xi across scales."""
    base = EnvironmentSpec(d=2, L=16.0, N=64, R_dep=0.5, model="checkerboard",
                           tail_hi=8.0, tail_lo=8.0, theta_mode="unit",
                           axis_coupling="shared", p=2.0, q=2.0, r=1.0, seed=0)
    rep = stochastics.moment_bound_experiment(base, xi=1.5,
                                              K_values=(16, 64, 256, 1024),
                                              M=M, bootstrap=1000, seed=0)
    if guard is not None:
        guard.check("moments")
    rep["preset"] = "moments"
    rep["passed"] = rep.pop("pass")
    return rep


def green_d3(seeds=G3["seeds"], guard: TimeGuard | None = None) -> dict:
    """Green-function scaling: constant control, random ensemble, wrong-a control."""
    L, N, scales = G3["L"], G3["N"], G3["scales"]

    const = constant_environment(3, L, N, theta_mode="lambda")
    ctrl = scaling_limit_experiment(const, scales=(1,), r1=1.0, r2=1.5)
    ctrl_rel = ctrl["details"][0]["rel_sup"]
    if guard is not None:
        guard.check("constant control")

    def spec(seed):
        return EnvironmentSpec(d=3, L=L, N=N, R_dep=0.25, model="checkerboard",
                               tail_hi=8.0, tail_lo=8.0, theta_mode="lambda",
                               p=2.0, q=6.0, r=6.0, seed=seed)

    ensemble = []
    for s in seeds:
        rep = scaling_limit_experiment(spec(s), scales=scales)
        e = rep["e_n"]
        ensemble.append({
            "seed": s, "e_n": e, "decreasing": rep["decreasing"],
            "halving": bool(e[-1] < e[0] / 2), "a": rep["a"],
            "Sigma_trace": float(np.trace(np.asarray(rep["Sigma"]))),
        })
        if guard is not None:
            guard.check(f"seed{s}")

    neg_field = generate_environment(spec(seeds[0]))
    wrong_a = float(np.mean(neg_field.Lam))        # arithmetic-mean impostor
    neg = scaling_limit_experiment(neg_field, scales=scales, a_value=wrong_a)
    neg_halving = bool(neg["e_n"][-1] < neg["e_n"][0] / 2)

    ens_pass = all(x["decreasing"] and x["halving"] for x in ensemble)
    return {
        "preset": "green-d3",
        "constant_control": {"rel_sup": ctrl_rel, "tolerance": 0.03,
                             "passed": bool(ctrl_rel <= 0.03)},
        "ensemble": ensemble,
        "negative_control": {"a_used": wrong_a, "e_n": neg["e_n"],
                             "halving": neg_halving,
                             "passed": bool(not neg_halving)},
        "passed": bool(ctrl_rel <= 0.03 and ens_pass and not neg_halving),
    }


# ---------------------------------------------------------------------------
# Dispatch

_FAMILIES = {
    "upper": {"d2": "upper-d2", "d2-small": ("upper-d2", {"seeds": (0, 1, 2, 3, 4)})},
    "lower": {"d2": "lower-d2", "d2-small": ("lower-d2", {"seeds": (0, 1, 2, 3, 4)})},
    "longrange": {"d2": "longrange-d2", "d2-small": ("longrange-d2", {"seeds": (5,)})},
    "green": {"d3": "green-d3", "d3-small": ("green-d3", {"seeds": (0, 1)})},
}

_RUNNERS = {
    "gaussian-sanity": gaussian_sanity,
    "upper-d2": upper_d2,
    "lower-d2": lower_d2,
    "longrange-d2": longrange_d2,
    "moments": moments,
    "green-d3": green_d3,
}


def resolve_preset(name: str, variant: str | None = None):
    """(runner, kwargs) for a full preset name or family + size variant."""
    if name in _RUNNERS:
        if variant is not None and name not in _FAMILIES:
            raise ConfigurationError(f"preset {name!r} takes no variant")
        return _RUNNERS[name], {}
    fam = _FAMILIES.get(name)
    if fam is None:
        raise ConfigurationError(
            f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    if variant is None:
        raise ConfigurationError(
            f"family {name!r} needs --preset, one of {sorted(fam)}")
    entry = fam.get(variant)
    if entry is None:
        raise ConfigurationError(
            f"unknown variant {variant!r} for {name!r}; choose from {sorted(fam)}")
    if isinstance(entry, tuple):
        return _RUNNERS[entry[0]], dict(entry[1])
    return _RUNNERS[entry], {}


def run_preset(name: str, variant: str | None = None,
               max_seconds: float | None = None) -> dict:
    runner, kwargs = resolve_preset(name, variant)
    guard = TimeGuard(max_seconds)
    report = runner(guard=guard, **kwargs)
    if variant is not None:
        report["variant"] = variant
    return report
