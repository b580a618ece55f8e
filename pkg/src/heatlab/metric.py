"""Intrinsic (Riemannian) metric of the medium, d_theta.

The metric weights line elements by sqrt(theta/a) axis-wise: the length of a
velocity v at cell x is sqrt(sum_i v_i^2 theta(x)/a_i(x)), i.e. the Riemannian
metric with tensor (a/theta)^(-1).  Distances are computed as shortest paths
in a periodic graph whose moves are a fixed stencil (8/16 neighbors in 2d, 26
in 3d) and whose edge lengths integrate the line element with the trapezoid
rule between the endpoint cells.

The graph metric overestimates the continuum one by at most the stencil
slack (worst secant of the angular gaps, about 8% for 8 moves and 2.8% for
16), which the sandwich audit accounts for.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .env import EnvironmentField
from .errors import GeometryError, ModeError, PairingError
from .geometry import euclidean_distance_grid, neighborhood_offsets, stencil_slack


@lru_cache(maxsize=8)
def _cached_slack(d: int, kind: int) -> float:
    return stencil_slack(d, kind)


@dataclass
class MetricField:
    """Distance map d_theta(source, .) on the grid."""

    source: tuple
    dist: np.ndarray            # grid-shaped
    neighborhood: int
    h: float
    theta_mode: str
    meta: dict = dc_field(default_factory=dict)

    @property
    def shape(self) -> tuple:
        return self.dist.shape


def _direction_weight(field: EnvironmentField, v_phys: np.ndarray) -> np.ndarray:
    """sqrt(sum_i vhat_i^2 theta/a_i) per cell, for a unit direction of v."""
    v2 = v_phys**2 / (v_phys**2).sum()
    q = np.zeros(field.shape)
    for i in range(field.d):
        q += v2[i] * field.theta / field.a[i]
    return np.sqrt(q)


def metric_graph(field: EnvironmentField, neighborhood: int | None = None) -> sp.csr_matrix:
    """Periodic weighted graph whose shortest paths realize d_theta."""
    d = field.d
    if neighborhood is None:
        neighborhood = 16 if d == 2 else 26
    offs = neighborhood_offsets(d, neighborhood)
    # keep one representative per +-pair
    keep = []
    for o in offs:
        for c in o:
            if c > 0:
                keep.append(o)
                break
            if c < 0:
                break
    n = int(np.prod(field.shape))
    idx = np.arange(n).reshape(field.shape)
    h = field.h
    rows, cols, vals = [], [], []
    for o in keep:
        v_phys = np.asarray(o, dtype=float) * h
        length = float(np.linalg.norm(v_phys))
        W = _direction_weight(field, v_phys)
        Wn = np.roll(W, shift=tuple(-int(c) for c in o), axis=tuple(range(d)))
        nb = np.roll(idx, shift=tuple(-int(c) for c in o), axis=tuple(range(d)))
        w = length * 0.5 * (W + Wn)
        rows.append(idx.ravel())
        cols.append(nb.ravel())
        vals.append(w.ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    if (vals <= 0).any() or not np.isfinite(vals).all():
        raise GeometryError("metric graph needs positive finite edge weights")
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def intrinsic_distance_map(field: EnvironmentField, source,
                           neighborhood: int | None = None) -> MetricField:
    """d_theta(source, y) for every cell y, raw graph distances (no smoothing)."""
    if neighborhood is None:
        neighborhood = 16 if field.d == 2 else 26
    G = metric_graph(field, neighborhood)
    i0 = int(np.ravel_multi_index(tuple(source), field.shape))
    dist = dijkstra(G, directed=False, indices=i0)
    return MetricField(
        source=tuple(int(c) for c in source),
        dist=dist.reshape(field.shape),
        neighborhood=neighborhood,
        h=field.h,
        theta_mode=field.spec.theta_mode,
        meta={"slack": _cached_slack(field.d, neighborhood)},
    )


def euclidean_comparison(mf: MetricField, field: EnvironmentField,
                         n_pairs: int = 1000, seed: int = 0) -> dict:
    """Ratios d_Lambda/d_euclid over random targets (theta = Lambda mode only).

    The min ratio is the comparability diagnostic; it can dip below 1 only by
    quadrature slack, since edge weights sqrt(Lam/a_i) >= 1 along every axis.
    """
    if field.spec.theta_mode != "lambda":
        raise ModeError("euclidean comparison requires the theta = Lambda speed mode")
    if mf.shape != field.shape:
        raise PairingError("metric map and field disagree on the grid")
    rng = np.random.default_rng(seed)
    eu = euclidean_distance_grid(field.shape, mf.source, field.h)
    flat_d = mf.dist.ravel()
    flat_e = eu.ravel()
    cand = np.nonzero(flat_e > 2 * field.h)[0]
    pick = rng.choice(cand, size=min(n_pairs, cand.size), replace=False)
    ratios = flat_d[pick] / flat_e[pick]
    return {
        "min_ratio": float(ratios.min()),
        "mean_ratio": float(ratios.mean()),
        "max_ratio": float(ratios.max()),
        "slack": mf.meta.get("slack", _cached_slack(field.d, mf.neighborhood)),
        "n_pairs": int(pick.size),
    }


def sandwich_check(mf: MetricField, field: EnvironmentField,
                   n_pairs: int = 1000, seed: int = 0) -> dict:
    """Audit sqrt(min theta/Lam) d <= d_theta <= sqrt(max theta/lam) d (1+slack).

    The lower factor needs no slack (every edge is at least that long); the
    upper side allows the stencil slack of the graph metric.
    """
    rng = np.random.default_rng(seed)
    lo_fac = float(np.sqrt(field.theta / field.Lam).min())
    hi_fac = float(np.sqrt(field.theta / field.lam).max())
    slack = mf.meta.get("slack", _cached_slack(field.d, mf.neighborhood))
    eu = euclidean_distance_grid(field.shape, mf.source, field.h)
    flat_d = mf.dist.ravel()
    flat_e = eu.ravel()
    cand = np.nonzero(flat_e > 0)[0]
    pick = rng.choice(cand, size=min(n_pairs, cand.size), replace=False)
    lower_ok = flat_d[pick] >= lo_fac * flat_e[pick] * (1.0 - 1e-9)
    upper_ok = flat_d[pick] <= hi_fac * flat_e[pick] * (1.0 + slack + 1e-9)
    return {
        "violations_lower": int((~lower_ok).sum()),
        "violations_upper": int((~upper_ok).sum()),
        "lo_factor": lo_fac,
        "hi_factor": hi_fac,
        "slack": slack,
        "n_pairs": int(pick.size),
    }


def triangle_violations(map_x0: MetricField, maps_z: list[MetricField],
                        targets, tol: float = 1e-9) -> int:
    """Count d(x0,y) > d(x0,z) + d(z,y) + tol over z in maps_z, y in targets."""
    bad = 0
    shape = map_x0.shape
    for mz in maps_z:
        if mz.shape != shape:
            raise PairingError("metric maps live on different grids")
        dz = map_x0.dist[tuple(np.array(mz.source))]
        for y in targets:
            lhs = map_x0.dist[tuple(y)]
            rhs = dz + mz.dist[tuple(y)]
            if lhs > rhs + tol * max(1.0, rhs):
                bad += 1
    return bad


def coarse_to_fine_cells(shape_coarse, factor: int):
    """Index arrays mapping each coarse cell to its nearest fine cell.

    Fine grids refine each cell into `factor` pieces per axis; the fine cell
    whose center is nearest (lower side on ties) is index factor*i + floor(
    (factor-1)/2).
    """
    off = (factor - 1) // 2
    return tuple(np.arange(n) * factor + off for n in shape_coarse)


def strict_locality_probe(levels: list[MetricField], eps_list=None) -> dict:
    """Self-convergence study across dyadic refinements of the same medium.

    `levels` must be ordered coarse to fine with N doubling and matching
    physical sources.  Reports sup differences between consecutive levels
    (sampled at coarse cell centers) and, per level, the sup of d_theta over
    shrinking Euclidean balls at the source.  The differences must decrease
    for a field sampled from one continuum medium; fresh cell-scale noise at
    every level leaves them O(1).
    """
    if len(levels) < 3:
        raise ValueError("need at least three refinement levels")
    diffs = []
    for a, b in zip(levels, levels[1:]):
        fa, fb = np.array(a.shape), np.array(b.shape)
        if not np.all(fb == 2 * fa):
            raise PairingError(f"levels must double the grid: {a.shape} -> {b.shape}")
        sel = coarse_to_fine_cells(a.shape, 2)
        fine_on_coarse = b.dist[np.ix_(*sel)]
        diffs.append(float(np.max(np.abs(a.dist - fine_on_coarse))))
    if eps_list is None:
        h0 = levels[0].h
        eps_list = [8 * h0, 4 * h0, 2 * h0]
    tab = []
    for lev in levels:
        eu = euclidean_distance_grid(lev.shape, lev.source, lev.h)
        row = []
        for eps in eps_list:
            m = eu <= eps + 1e-12
            row.append(float(lev.dist[m].max()))
        tab.append(row)
    decreasing = all(b < a for a, b in zip(diffs, diffs[1:]))
    return {
        "diffs": diffs,
        "decreasing": decreasing,
        "eps_list": [float(e) for e in eps_list],
        "small_ball_sup": tab,
        "ratios": [a / b if b > 0 else np.inf for a, b in zip(diffs, diffs[1:])],
    }
