"""Finite-volume discretization of (1/theta) div(a grad .) on the periodic box.

Edge conductances are harmonic means of the adjacent cell values divided by
h^2 (arithmetic mean available for comparison studies).  The generator L acts
on cell vectors; it satisfies detailed balance theta(x) L(x,y) = theta(y)
L(y,x), and its row sums vanish to within a few ulps of the diagonal scale:
the diagonal is assembled as minus the sum of the stored off-diagonal
entries, so the only residue is summation-order rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .env import EnvironmentField
from .errors import AssemblyError


def _edge_conductances(field: EnvironmentField, mean: str) -> list[np.ndarray]:
    """c(x, x+e_i)/h^2 for each axis, shape (N,)*d arrays (wrap at the seam)."""
    h2 = field.h ** 2
    out = []
    for i in range(field.d):
        ai = field.a[i]
        aj = np.roll(ai, -1, axis=i)
        if mean == "harmonic":
            c = 2.0 * ai * aj / (ai + aj)
        elif mean == "arithmetic":
            c = 0.5 * (ai + aj)
        else:
            raise AssemblyError(f"unknown edge mean {mean!r}")
        out.append(c / h2)
    return out


@dataclass
class DiscreteGenerator:
    """Sparse generator with its conductance graph and speed measure."""

    field: EnvironmentField
    L: sp.csr_matrix            # generator, rows scaled by 1/theta
    C: sp.csr_matrix            # symmetric conductance Laplacian (theta-free)
    theta_flat: np.ndarray
    edge_mean: str = "harmonic"

    @property
    def shape(self) -> tuple:
        return self.field.shape

    @property
    def h(self) -> float:
        return self.field.h

    @property
    def n(self) -> int:
        return int(self.theta_flat.size)

    @property
    def cell_volume(self) -> float:
        return self.h ** self.field.d

    def flat_index(self, cell) -> int:
        return int(np.ravel_multi_index(tuple(cell), self.shape))

    def cell_of(self, idx: int) -> tuple:
        return tuple(int(v) for v in np.unravel_index(idx, self.shape))


def assemble_generator(field: EnvironmentField, edge_mean: str = "harmonic") -> DiscreteGenerator:
    """Build the finite-volume generator for a sampled environment."""
    a = np.asarray(field.a)
    if a.shape != (field.d,) + field.shape:
        raise AssemblyError(f"tensor array has shape {a.shape}, expected {(field.d,) + field.shape}")
    bad = ~np.isfinite(a) | (a <= 0)
    if bad.any():
        comp, *cell = np.argwhere(bad)[0]
        raise AssemblyError(
            f"non-positive or non-finite conductance a[{int(comp)}] at cell {tuple(int(c) for c in cell)}"
        )
    if (~np.isfinite(field.theta)).any() or (field.theta <= 0).any():
        cell = np.argwhere(~np.isfinite(field.theta) | (field.theta <= 0))[0]
        raise AssemblyError(f"non-positive speed measure at cell {tuple(int(c) for c in cell)}")

    shape = field.shape
    n = int(np.prod(shape))
    idx = np.arange(n).reshape(shape)
    conds = _edge_conductances(field, edge_mean)

    rows, cols, vals = [], [], []
    for i in range(field.d):
        nb = np.roll(idx, -1, axis=i)
        c = conds[i].ravel()
        rows.append(idx.ravel())
        cols.append(nb.ravel())
        vals.append(c)
        rows.append(nb.ravel())
        cols.append(idx.ravel())
        vals.append(c)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)

    C = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    # diagonal = minus the row sums actually stored, so rows sum to zero exactly
    diag = np.asarray(C.sum(axis=1)).ravel()
    C = C - sp.diags(diag)
    C = C.tocsr()

    theta_flat = field.theta.ravel().copy()
    L = sp.diags(1.0 / theta_flat) @ C
    return DiscreteGenerator(field=field, L=L.tocsr(), C=C, theta_flat=theta_flat,
                             edge_mean=edge_mean)


def weighted_inner_product(gen: DiscreteGenerator, u: np.ndarray, v: np.ndarray) -> float:
    """(u, v)_theta = sum u v theta h^d."""
    u = np.asarray(u).ravel()
    v = np.asarray(v).ravel()
    return float((u * v * gen.theta_flat).sum() * gen.cell_volume)


def dirichlet_energy(gen: DiscreteGenerator, u: np.ndarray) -> float:
    """E(u,u) = sum over edges c(x,y) (u(x)-u(y))^2 h^d = -(u, Lu)_theta."""
    u = np.asarray(u).ravel()
    return float(-u @ (gen.C @ u) * gen.cell_volume)


def h_squared(gen: DiscreteGenerator, psi: np.ndarray) -> float:
    """Perturbation rate h(psi)^2 = max_x sum_i a_i(x) (D_i^+ psi)^2 / theta(x).

    D_i^+ is the periodic forward difference.  This is the discrete quadratic
    form controlling exp(psi)-twisted L^2 growth of the semigroup.
    """
    field = gen.field
    psi = np.asarray(psi, dtype=float).reshape(field.shape)
    h = field.h
    total = np.zeros(field.shape)
    for i in range(field.d):
        grad = (np.roll(psi, -1, axis=i) - psi) / h
        total += field.a[i] * grad**2
    total /= field.theta
    return float(total.max())


def symmetrized_dense(gen: DiscreteGenerator) -> np.ndarray:
    """Dense theta^(1/2) L theta^(-1/2); symmetric, for small-grid oracles."""
    if gen.n > 4096:
        raise AssemblyError(f"dense form restricted to <= 4096 cells, got {gen.n}")
    s = np.sqrt(gen.theta_flat)
    M = gen.C.toarray()
    return M / np.outer(s, s)
