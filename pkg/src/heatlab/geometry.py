"""Periodic lattice geometry helpers.

Cells of the box [0, L)^d are indexed by integer tuples; cell i has center
(i + 1/2) h with h = L/N.  All distances are taken with minimum-image
convention on the torus unless stated otherwise.
"""

from __future__ import annotations

import numpy as np

from .errors import GeometryError


def cell_centers_1d(n: int, h: float) -> np.ndarray:
    return (np.arange(n) + 0.5) * h


def min_image(delta: np.ndarray, n: int) -> np.ndarray:
    """Wrap integer cell offsets into (-n/2, n/2]."""
    d = np.asarray(delta)
    return (d + n // 2) % n - n // 2


def periodic_delta_grid(shape, center, h: float) -> np.ndarray:
    """Physical min-image displacement of every cell center from `center`.

    `center` is a cell index tuple.  Returns array of shape (d, *shape).
    """
    d = len(shape)
    out = np.empty((d,) + tuple(shape))
    for ax, n in enumerate(shape):
        idx = min_image(np.arange(n) - center[ax], n) * h
        sh = [1] * d
        sh[ax] = n
        out[ax] = idx.reshape(sh)
    return out


def euclidean_distance_grid(shape, center, h: float) -> np.ndarray:
    delta = periodic_delta_grid(shape, center, h)
    return np.sqrt((delta**2).sum(axis=0))


def chebyshev_distance_grid(shape, center, h: float) -> np.ndarray:
    delta = periodic_delta_grid(shape, center, h)
    return np.abs(delta).max(axis=0)


def ball_mask(shape, center, radius: float, h: float, norm: str = "euclid") -> np.ndarray:
    """Cells whose center lies in the closed ball (midpoint quadrature rule).

    The ball radius must fit in the box (radius <= L/2) so that the periodic
    wrap cannot make the ball self-intersect.
    """
    L = min(n * h for n in shape)
    if radius > L / 2 + 1e-12:
        raise GeometryError(f"ball radius {radius} exceeds half box side {L / 2}")
    if radius < 0:
        raise GeometryError("negative ball radius")
    if norm == "euclid":
        dist = euclidean_distance_grid(shape, center, h)
    elif norm == "max":
        dist = chebyshev_distance_grid(shape, center, h)
    else:
        raise ValueError(f"unknown norm {norm!r}")
    return dist <= radius + 1e-12


def nearest_cell(point, shape, h: float) -> tuple:
    """Cell index whose center is nearest to a physical point (periodic)."""
    idx = []
    for ax, n in enumerate(shape):
        i = int(np.floor(point[ax] / h - 0.5 + 0.5))  # round to nearest center
        idx.append(i % n)
    return tuple(idx)


def segment_tube_mask(shape, z, r0: float, h: float) -> np.ndarray:
    """Cells within max-norm distance 2*r0 of the segment {tau*z : tau in [0,2]}.

    The segment starts at the center of cell (0,...,0).  Used by the region
    builder of the concentration experiments.
    """
    d = len(shape)
    z = np.asarray(z, dtype=float)
    origin = tuple(0 for _ in shape)
    delta = periodic_delta_grid(shape, origin, h)  # (d, *shape)
    # distance from each cell center to the segment, axis-wise sup norm,
    # evaluated by discretizing tau
    taus = np.linspace(0.0, 2.0, 65)
    best = np.full(shape, np.inf)
    for tau in taus:
        p = tau * z
        dev = np.abs(delta - p.reshape((d,) + (1,) * d)).max(axis=0)
        best = np.minimum(best, dev)
    return best <= 2 * r0 + 1e-12


def neighborhood_offsets(d: int, kind: int) -> np.ndarray:
    """Move sets for graph shortest-path metrics.

    d=2: kind 8 (king moves) or 16 (king + knight); d=3: kind 26.
    """
    if d == 2 and kind == 8:
        offs = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1) if (i, j) != (0, 0)]
    elif d == 2 and kind == 16:
        offs = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1) if (i, j) != (0, 0)]
        offs += [
            (2, 1), (1, 2), (-1, 2), (-2, 1),
            (-2, -1), (-1, -2), (1, -2), (2, -1),
        ]
    elif d == 3 and kind == 26:
        offs = [
            (i, j, k)
            for i in (-1, 0, 1)
            for j in (-1, 0, 1)
            for k in (-1, 0, 1)
            if (i, j, k) != (0, 0, 0)
        ]
    else:
        raise GeometryError(f"unsupported neighborhood {kind} for d={d}")
    return np.array(offs, dtype=np.int64)


def stencil_slack(d: int, kind: int) -> float:
    """Worst-case ratio (graph path length)/(Euclidean length) - 1, exact.

    A direction inside a cone of adjacent moves is realized by a nonnegative
    combination of the cone's generators, and on each cone the cost is the
    linear form w.v with w solving w.m_i = |m_i|.  The worst unit direction
    therefore costs |w|, attained at v = w/|w| (which lies in the cone for
    every stencil offered here).  In 2d this reduces to sec(half the largest
    angular gap); for the 3d 26-move stencil the fundamental cone is spanned
    by an axis, a face diagonal and a body diagonal.
    """
    offs = neighborhood_offsets(d, kind).astype(float)
    if d == 2:
        ang = np.sort(np.unique(np.arctan2(offs[:, 1], offs[:, 0])))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2.0 * np.pi]]))
        return float(1.0 / np.cos(gaps.max() / 2.0) - 1.0)
    # d == 3: by symmetry it suffices to look at the cone e1, (1,1,0), (1,1,1)
    gen = np.array([[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 1.0, 1.0]])
    w = np.linalg.solve(gen, np.linalg.norm(gen, axis=1))
    coeffs = np.linalg.solve(gen.T, w)  # w/|w| must lie inside the cone
    assert (coeffs > 0).all()
    return float(np.linalg.norm(w) - 1.0)
