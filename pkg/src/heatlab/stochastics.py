"""Ensemble experiments: chaining geometry, Rosenthal, moment concentration.

These are the probabilistic ingredients of the lower-bound machinery: the
ball-chain interpolation geometry, the Rosenthal inequality for independent
sums (checked by exhaustive enumeration), the 2xi-moment concentration of
region integrals of Lambda^p, and the chained ergodic-average bound.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .env import (EnvironmentSpec, EnvironmentField, generate_environment,
                  ball_norm, hi_moment, lo_moment)
from .errors import (ConfigurationError, GeometryError, MomentMarginError,
                     SequenceError)
from .geometry import ball_mask, nearest_cell
from .util import STREAM_BOOT, STREAM_SEQ, STREAM_TRIALS, child_seed, substream

MOMENT_MARGIN = 1.10
_HOLDER_TOL = 1e-12


# ---------------------------------------------------------------------------
# Chain geometry

@dataclass(frozen=True)
class ChainGeometry:
    """Ball chain interpolating 0 -> x with k steps of duration s."""

    x: tuple
    r: float
    k: int
    s: float
    ball_radius: float

    @property
    def D(self) -> float:
        return float(np.linalg.norm(self.x))

    @property
    def points(self) -> np.ndarray:
        """x_j = (j/k) x for j = 0..k, shape (k+1, d)."""
        j = np.arange(self.k + 1)[:, None]
        return j / self.k * np.asarray(self.x, dtype=float)[None, :]


def chain_geometry(x, r: float) -> ChainGeometry:
    """Smallest admissible k with 12 D/r <= k <= 16 D/r, D = |x|."""
    x = tuple(float(c) for c in x)
    D = float(np.linalg.norm(x))
    if D <= 0:
        raise GeometryError("chain endpoint must be away from the origin")
    if not 0 < r <= 4 * D:
        raise GeometryError(f"radius must satisfy 0 < r <= 4 |x| = {4*D:g}, got {r:g}")
    k = math.ceil(12 * D / r)
    if k > 16 * D / r:
        # cannot happen for r <= 4D since the window has width 4D/r >= 1
        raise GeometryError("no admissible ball count in [12 D/r, 16 D/r]")
    s = r * D / k
    assert r**2 / 16 - 1e-12 <= s <= r**2 / 12 + 1e-12
    return ChainGeometry(x=x, r=float(r), k=int(k), s=float(s),
                         ball_radius=float(r) / 48.0)


# ---------------------------------------------------------------------------
# Rosenthal inequality by exhaustive enumeration

def _check_rv(values, probs, index: int):
    values = np.asarray(values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if values.size != probs.size or values.size == 0 or values.size > 4:
        raise ConfigurationError(
            f"variable {index}: support must have 1..4 points")
    if (probs < 0).any() or abs(probs.sum() - 1.0) > 1e-12:
        raise ConfigurationError(f"variable {index}: probabilities must sum to 1")
    mean = float(values @ probs)
    scale = max(1.0, np.abs(values).max())
    if abs(mean) > 1e-12 * scale:
        raise ConfigurationError(
            f"variable {index} is not centered (mean {mean:.3e}); "
            "Rosenthal applies to mean-zero summands")
    return values, probs


def rosenthal_check(distributions, k_exponent: float) -> dict:
    """Exact E|sum Y|^k vs max(sum E|Y|^k, (sum E Y^2)^{k/2}).

    Enumerates the full product space (support <= 4, n <= 6: at most 4096
    outcomes), so every expectation is exact up to float rounding.
    """
    if k_exponent <= 2:
        raise ConfigurationError("Rosenthal regime needs moment order k > 2")
    if len(distributions) == 0 or len(distributions) > 6:
        raise ConfigurationError("need 1..6 independent variables")
    rvs = [_check_rv(v, p, i) for i, (v, p) in enumerate(distributions)]
    lhs = 0.0
    for combo in itertools.product(*[range(len(v)) for v, _ in rvs]):
        tot, prob = 0.0, 1.0
        for (v, p), j in zip(rvs, combo):
            tot += v[j]
            prob *= p[j]
        lhs += prob * abs(tot) ** k_exponent
    sum_k = sum(float(p @ np.abs(v) ** k_exponent) for v, p in rvs)
    sum_2 = sum(float(p @ v**2) for v, p in rvs)
    rhs = max(sum_k, sum_2 ** (k_exponent / 2.0))
    return {
        "lhs": lhs,
        "rhs": rhs,
        "ratio": lhs / rhs if rhs > 0 else 0.0,
        "k": float(k_exponent),
        "n": len(rvs),
    }


def random_rosenthal_ensemble(n_trials: int = 500, seed: int = 0) -> dict:
    """Max Rosenthal ratio over random small mean-zero ensembles."""
    rng = np.random.default_rng(seed)
    worst, ratios = None, []
    for _ in range(n_trials):
        n = int(rng.integers(1, 7))
        k = float(rng.choice([3.0, 4.0]))
        dists = []
        for _ in range(n):
            m = int(rng.integers(2, 5))
            vals = rng.standard_normal(m) * rng.choice([0.5, 1.0, 3.0])
            pr = rng.dirichlet(np.ones(m))
            vals = vals - vals @ pr          # exact centering
            dists.append((vals, pr))
        rep = rosenthal_check(dists, k)
        ratios.append(rep["ratio"])
        if worst is None or rep["ratio"] > worst["ratio"]:
            worst = rep
    return {
        "max_ratio": float(np.max(ratios)),
        "mean_ratio": float(np.mean(ratios)),
        "n_trials": n_trials,
        "worst": worst,
    }


# ---------------------------------------------------------------------------
# Moment concentration of region integrals

def _nested_box_masks(shape, cube_cells: int, K_values) -> dict:
    masks = {}
    for K in K_values:
        m = round(K ** 0.5) if len(shape) == 2 else round(K ** (1 / 3))
        if m ** len(shape) != K:
            raise GeometryError(f"K = {K} is not a perfect {len(shape)}-th power")
        side = m * cube_cells
        if side > min(shape):
            raise GeometryError(
                f"region of {K} dependence cubes ({side} cells) exceeds the box")
        sl = tuple(slice(0, side) for _ in shape)
        mask = np.zeros(shape, dtype=bool)
        mask[sl] = True
        masks[K] = mask
    return masks


def moment_bound_experiment(base_spec: EnvironmentSpec, xi: float = 1.5,
                            K_values=(16, 64, 256, 1024), M: int = 2000,
                            p: float | None = None, bootstrap: int = 1000,
                            seed: int = 0) -> dict:
    """Monte Carlo E|int_R (Lambda^p - mean)|^{2 xi} against K^xi.

    Requires shared axis coupling so the exact per-cell mean E[Lambda^p] is
    available in closed form (Lambda = hi * lo with independent Pareto-type
    factors).  Integrals over nested square regions of K dependence cubes
    share one environment per sample; comparisons across K therefore use
    common randomness, which only tightens the ratio comparison.
    """
    if xi <= 1:
        raise ConfigurationError("the moment bound needs xi > 1")
    if base_spec.axis_coupling != "shared":
        raise ConfigurationError(
            "exact centering needs axis_coupling='shared' (closed-form E[Lambda^p])")
    if p is None:
        p = base_spec.p
    need = 2 * xi * p * MOMENT_MARGIN
    if base_spec.tail_hi is None or base_spec.tail_hi < need:
        raise MomentMarginError(
            f"E[Lambda^{2*xi*p:g}] needs tail index >= {need:g}, "
            f"spec has {base_spec.tail_hi}")
    h = base_spec.h
    cube_cells = int(round(base_spec.R_dep / h))
    if abs(cube_cells * h - base_spec.R_dep) > 1e-9 * base_spec.R_dep:
        raise GeometryError("dependence range must be a whole number of cells")
    masks = _nested_box_masks(base_spec.shape, cube_cells, K_values)
    mean_cell = hi_moment(base_spec.tail_hi, p) * lo_moment(base_spec.tail_lo, p) \
        if base_spec.tail_lo is not None else hi_moment(base_spec.tail_hi, p)
    cell_vol = h ** base_spec.d
    samples = np.empty((M, len(K_values)))
    for mtrial in range(M):
        spec = dataclasses.replace(
            base_spec, seed=child_seed(seed, STREAM_TRIALS, mtrial))
        f = generate_environment(spec)
        dev = f.Lam ** p - mean_cell
        for jK, K in enumerate(K_values):
            samples[mtrial, jK] = cell_vol * float(dev[masks[K]].sum())
    pw = np.abs(samples) ** (2 * xi)
    moments = pw.mean(axis=0)
    ratios = moments / np.asarray(K_values, dtype=float) ** xi
    rng = substream(seed, STREAM_BOOT)
    idx = rng.integers(0, M, size=(bootstrap, M))
    boot = pw[idx].mean(axis=1)                 # (bootstrap, nK)
    boot_ratio = boot / np.asarray(K_values, dtype=float) ** xi
    ci = np.percentile(boot_ratio, [2.5, 97.5], axis=0)
    mm = boot_ratio.max(axis=1) / boot_ratio.min(axis=1)
    mm_ci = np.percentile(mm, [2.5, 97.5])
    point = float(ratios.max() / ratios.min())
    return {
        "K_values": [int(K) for K in K_values],
        "xi": float(xi),
        "p": float(p),
        "M": int(M),
        "mean_cell": float(mean_cell),
        "moments": moments.tolist(),
        "ratios": ratios.tolist(),
        "ratio_ci": ci.T.tolist(),
        "max_over_min": point,
        "max_over_min_ci": mm_ci.tolist(),
        "pass": bool(point <= 3.0 and mm_ci[1] <= 4.5),
    }


def region_cover_count(mask: np.ndarray, cube_cells: int) -> int:
    """Number of side-R_dep cubes needed to cover a cell mask."""
    shape = mask.shape
    pads = [(0, (-s) % cube_cells) for s in shape]
    m = np.pad(mask, pads)
    view = m
    for ax, s in enumerate(m.shape):
        view = view.reshape(view.shape[:ax * 2] + (s // cube_cells, cube_cells)
                            + view.shape[ax * 2 + 1:])
    axes = tuple(range(1, 2 * mask.ndim, 2))
    return int(view.any(axis=axes).sum())


# ---------------------------------------------------------------------------
# Chained ergodic averages

def _holder_triple(values_a: np.ndarray, values_b: np.ndarray,
                   p: float, q: float) -> dict:
    """sum a b <= n^{1-1/p-1/q} (sum a^p)^{1/p} (sum b^q)^{1/q}, checked."""
    n = values_a.size
    lhs = float((values_a * values_b).sum())
    rhs = n ** (1 - 1 / p - 1 / q) * float((values_a ** p).sum()) ** (1 / p) \
        * float((values_b ** q).sum()) ** (1 / q)
    if lhs > rhs * (1 + _HOLDER_TOL):
        raise AssertionError(
            f"Hoelder identity violated: {lhs!r} > {rhs!r}")
    return {"lhs": lhs, "rhs": rhs, "slack": rhs - lhs}


def chained_average_bound(field: EnvironmentField, chain: ChainGeometry,
                          y_points: np.ndarray | None = None,
                          p: float | None = None, q: float | None = None,
                          kappa: float = 1.0) -> dict:
    """sum_{j<k} (1 v ||Lam||_{p,B_j})^kappa (1 v ||lam||_{q,B_j})^kappa / k.

    B_j = B(y_j, sqrt(s)); y defaults to the chain centers x_j.  Every call
    also checks the three-exponent Hoelder step used to split the sum.
    """
    if p is None:
        p = field.spec.p
    if q is None:
        q = field.spec.q
    pts = chain.points if y_points is None else np.asarray(y_points, dtype=float)
    if pts.shape != (chain.k + 1, len(chain.x)):
        raise SequenceError(f"need {chain.k + 1} points, got {pts.shape}")
    if not np.allclose(pts[0], 0.0, atol=1e-12):
        raise SequenceError("the chain must start at the origin")
    if not np.allclose(pts[-1], np.asarray(chain.x), atol=1e-12):
        raise SequenceError("the chain must end at x")
    centers = chain.points
    off = np.linalg.norm(pts[1:-1] - centers[1:-1], axis=1)
    if (off > chain.ball_radius * (1 + 1e-9)).any():
        j = int(np.argmax(off)) + 1
        raise SequenceError(
            f"y_{j} strays {off[j-1]:.3g} from x_{j}, ball radius "
            f"{chain.ball_radius:.3g}")
    rad = math.sqrt(chain.s)
    shape, h = field.shape, field.h
    terms_a = np.empty(chain.k)
    terms_b = np.empty(chain.k)
    for j in range(chain.k):
        cell = nearest_cell(pts[j] % field.spec.L, shape, h)
        mask = ball_mask(shape, cell, rad, h)
        terms_a[j] = max(1.0, ball_norm(field.Lam, mask, p))
        terms_b[j] = max(1.0, ball_norm(field.lam, mask, q))
    prod = (terms_a ** kappa) * (terms_b ** kappa)
    holder = _holder_triple(terms_a ** kappa, terms_b ** kappa,
                            p / kappa, q / kappa)
    return {
        "sum": float(prod.sum()),
        "sum_over_k": float(prod.sum() / chain.k),
        "k": chain.k,
        "s": chain.s,
        "kappa": float(kappa),
        "holder": holder,
        "max_term": float(prod.max()),
    }


def random_admissible_sequence(chain: ChainGeometry, rng) -> np.ndarray:
    """Uniform y_j in B(x_j, r/48), endpoints pinned."""
    pts = chain.points.copy()
    d = pts.shape[1]
    for j in range(1, chain.k):
        v = rng.standard_normal(d)
        v /= np.linalg.norm(v)
        u = rng.random() ** (1.0 / d)
        pts[j] = pts[j] + chain.ball_radius * u * v
    return pts


def chained_average_ensemble(field: EnvironmentField, chain: ChainGeometry,
                             n_sequences: int = 100, seed: int = 0,
                             **kw) -> dict:
    """Center sequence plus random admissible sequences; worst-case report."""
    rng = substream(seed, STREAM_SEQ)
    base = chained_average_bound(field, chain, **kw)
    worst = base["sum_over_k"]
    vals = [worst]
    for _ in range(n_sequences):
        pts = random_admissible_sequence(chain, rng)
        rep = chained_average_bound(field, chain, y_points=pts, **kw)
        vals.append(rep["sum_over_k"])
    vals = np.asarray(vals)
    return {
        "center_sum_over_k": base["sum_over_k"],
        "max_sum_over_k": float(vals.max()),
        "mean_sum_over_k": float(vals.mean()),
        "spread": float(vals.max() - vals.min()),
        "n_sequences": int(n_sequences),
        "k": chain.k,
    }
