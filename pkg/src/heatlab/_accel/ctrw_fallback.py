"""Vectorized numpy implementation of the walker kernel.

Random numbers come from a stateless splitmix64 stream indexed by
(path, draw counter), so the draw sequence matches the compiled kernel
draw for draw.  Holding times consume one draw, jump selections a second;
a path that exceeds the horizon on its holding draw consumes nothing more.
"""

from __future__ import annotations

import numpy as np

PHI = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = 1.0 / (1 << 53)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


def _uniform(base: np.ndarray, ctr: np.ndarray) -> np.ndarray:
    """Strictly interior uniforms u in (0,1) for draw index `ctr`."""
    z = _mix(base + (ctr + np.uint64(1)) * PHI)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _U53


def path_bases(seed: int, n_paths: int) -> np.ndarray:
    pid = np.arange(n_paths, dtype=np.uint64)
    return _mix(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + (pid + np.uint64(1)) * PHI)


def simulate_counts(indptr, indices, rates, total_rate, start, t, n_paths, seed):
    indptr = np.asarray(indptr, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int64)
    rates = np.asarray(rates, dtype=np.float64)
    total_rate = np.asarray(total_rate, dtype=np.float64)
    n_cells = total_rate.size

    row_nnz = np.diff(indptr)
    uniform = row_nnz.max() == row_nnz.min()
    if uniform:
        k = int(row_nnz[0])
        nb = indices.reshape(n_cells, k)
        cum = np.cumsum(rates.reshape(n_cells, k), axis=1)

    with np.errstate(over="ignore"):
        base = path_bases(seed, n_paths)
    pos = np.full(n_paths, start, dtype=np.int64)
    t_acc = np.zeros(n_paths)
    ctr = np.zeros(n_paths, dtype=np.uint64)
    alive = np.ones(n_paths, dtype=bool)

    while alive.any():
        ia = np.nonzero(alive)[0]
        R = total_rate[pos[ia]]
        with np.errstate(over="ignore"):
            u1 = _uniform(base[ia], ctr[ia])
        ctr[ia] += np.uint64(1)
        tau = -np.log(u1) / R
        done = t_acc[ia] + tau > t
        alive[ia[done]] = False
        move = ia[~done]
        if move.size == 0:
            continue
        t_acc[move] += tau[~done]
        with np.errstate(over="ignore"):
            u2 = _uniform(base[move], ctr[move])
        ctr[move] += np.uint64(1)
        target = u2 * total_rate[pos[move]]
        if uniform:
            c = cum[pos[move]]
            sel = (c >= target[:, None]).argmax(axis=1)
            pos[move] = nb[pos[move], sel]
        else:
            for j, pidx in enumerate(move):
                row = pos[pidx]
                acc = 0.0
                chosen = indices[indptr[row + 1] - 1]
                for kk in range(indptr[row], indptr[row + 1]):
                    acc += rates[kk]
                    if acc >= target[j]:
                        chosen = indices[kk]
                        break
                pos[pidx] = chosen

    counts = np.bincount(pos, minlength=n_cells)
    return counts.astype(np.int64)
