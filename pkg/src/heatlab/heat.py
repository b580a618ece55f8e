"""Heat kernel columns p(t, x0, .) and related semigroup checks.

The kernel is normalized against the speed measure: columns store densities
with respect to theta(y) h^d, so the delta initial condition is
e_{x0} / (theta(x0) h^d) and mass sum p theta h^d = 1 is conserved exactly
by the conservative Crank-Nicolson step (theta - dt/2 C) u+ = (theta + dt/2 C) u.

Step sizes are capped at h^2 min(theta) / (2 d max(Lam)), which keeps the
explicit half of the step nonnegative, so columns never undershoot below
roundoff.  An optional step-halving controller refines until successive
solutions agree to `tol`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._accel import simulate_counts, backend_name
from .errors import PairingError, PositivityError, SolverError
from .operators import DiscreteGenerator, symmetrized_dense, weighted_inner_product, h_squared

UNDERSHOOT_TOL = 1e-12
MASS_TOL = 1e-9
_SPLU_LIMIT = 70000


def step_cap(gen: DiscreteGenerator) -> float:
    """Largest dt keeping the explicit Crank-Nicolson factor nonnegative."""
    field = gen.field
    return field.h**2 * float(field.theta.min()) / (2.0 * field.d * float(field.Lam.max()))


class _CNStepper:
    """Solve (theta - dt/2 C) u+ = (theta + dt/2 C) u with cached factorizations."""

    def __init__(self, gen: DiscreteGenerator):
        self.gen = gen
        self.theta = gen.theta_flat
        self.C = gen.C
        self._cache: dict[float, object] = {}
        self.use_direct = gen.n <= _SPLU_LIMIT

    def _system(self, dt: float):
        A = sp.diags(self.theta) - (dt / 2.0) * self.C
        return A.tocsc()

    def run(self, u: np.ndarray, dt: float, n_steps: int) -> np.ndarray:
        Th = sp.diags(self.theta)
        B = (Th + (dt / 2.0) * self.C).tocsr()
        if self.use_direct:
            lu = self._cache.get(dt)
            if lu is None:
                lu = spla.splu(self._system(dt))
                self._cache[dt] = lu
            for _ in range(n_steps):
                u = lu.solve(B @ u)
            return u
        A = self._system(dt).tocsr()
        Minv = sp.diags(1.0 / A.diagonal())
        for _ in range(n_steps):
            b = B @ u
            u, info = _cg(A, b, x0=u, M=Minv)
            if info != 0:
                res = float(np.linalg.norm(A @ u - b) / max(np.linalg.norm(b), 1e-300))
                raise SolverError(f"CG failed (info={info}), relative residual {res:.3e}")
        return u


def _cg(A, b, x0=None, M=None, rtol=1e-13):
    try:
        return spla.cg(A, b, x0=x0, M=M, rtol=rtol, atol=0.0)
    except TypeError:  # older scipy spells it tol
        return spla.cg(A, b, x0=x0, M=M, tol=rtol, atol=0.0)


def evolve(gen: DiscreteGenerator, u0: np.ndarray, times, tol: float | None = None,
           max_refine: int = 14) -> list[np.ndarray]:
    """States of du/dt = Lu at the requested times (ascending, >= 0).

    With tol=None each interval is stepped at the positivity cap.  Otherwise
    the interval step count doubles until two successive refinements agree to
    `tol` in sup norm (the finer solution is kept).
    """
    times = [float(t) for t in times]
    if any(t < 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be nonnegative and strictly increasing")
    stepper = _CNStepper(gen)
    cap = step_cap(gen)
    out = []
    u = np.asarray(u0, dtype=float).ravel().copy()
    t_prev = 0.0
    for t in times:
        dt_total = t - t_prev
        if dt_total == 0.0:
            out.append(u.copy())
            continue
        n = max(1, int(math.ceil(dt_total / cap - 1e-12)))
        v = stepper.run(u, dt_total / n, n)
        if tol is not None:
            for _ in range(max_refine):
                n2 = 2 * n
                v2 = stepper.run(u, dt_total / n2, n2)
                err = float(np.max(np.abs(v2 - v)))
                v, n = v2, n2
                if err < tol:
                    break
            else:
                raise SolverError(f"step controller failed to reach tol={tol} (last err {err:.2e})")
        u = v
        out.append(u.copy())
        t_prev = t
    return out


@dataclass
class KernelColumn:
    """Kernel values p(t, source, .) with respect to theta h^d at stored times."""

    source: tuple
    times: np.ndarray
    data: np.ndarray            # (n_times, n_cells)
    shape: tuple
    meta: dict = dc_field(default_factory=dict)

    def at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.times - t)))
        if not math.isclose(self.times[i], t, rel_tol=1e-9, abs_tol=1e-12):
            raise PairingError(f"time {t} not stored; available: {list(self.times)}")
        return self.data[i]

    def grid(self, t: float) -> np.ndarray:
        return self.at(t).reshape(self.shape)


def _delta_density(gen: DiscreteGenerator, x0) -> tuple[int, np.ndarray]:
    i0 = gen.flat_index(x0)
    u0 = np.zeros(gen.n)
    u0[i0] = 1.0 / (gen.theta_flat[i0] * gen.cell_volume)
    return i0, u0


def _validate_column(gen: DiscreteGenerator, times, states) -> dict:
    masses, mins, norms = [], [], []
    vol = gen.cell_volume
    for u in states:
        masses.append(float((u * gen.theta_flat).sum() * vol))
        mins.append(float(u.min()))
        norms.append(math.sqrt(max(0.0, weighted_inner_product(gen, u, u))))
    worst_mass = max(abs(m - 1.0) for m in masses)
    if worst_mass > MASS_TOL:
        raise SolverError(f"mass drift {worst_mass:.3e} exceeds {MASS_TOL}")
    worst_min = min(mins)
    if worst_min < -UNDERSHOOT_TOL:
        raise PositivityError(f"kernel undershoot {worst_min:.3e} below -{UNDERSHOOT_TOL}")
    for a, b in zip(norms, norms[1:]):
        if b > a * (1.0 + 1e-10) + 1e-300:
            raise SolverError(f"L2 norm grew along the column: {a} -> {b}")
    return {"masses": masses, "min_value": worst_min, "l2_norms": norms}


def heat_kernel_column(gen: DiscreteGenerator, x0, times, tol: float | None = None,
                       method: str = "cn") -> KernelColumn:
    """Compute p(t, x0, .) at the given times.

    method 'cn' uses Crank-Nicolson stepping; 'dense' uses the eigensolver
    oracle (small grids only).  Time 0 stores the delta density itself.
    """
    times = np.asarray(sorted(float(t) for t in times))
    if times.size == 0 or times[0] < 0:
        raise ValueError("need nonnegative times")
    i0, u0 = _delta_density(gen, x0)
    run_times = [t for t in times if t > 0]
    if method == "cn":
        states_run = evolve(gen, u0, run_times, tol=tol)
        meta_solver = {"solver": "cn", "cap": step_cap(gen), "tol": tol}
    elif method == "dense":
        states_run = _dense_states(gen, u0, run_times)
        meta_solver = {"solver": "eigh"}
    else:
        raise ValueError(f"unknown method {method!r}")
    states = []
    it = iter(states_run)
    for t in times:
        states.append(u0.copy() if t == 0 else next(it))
    diag = _validate_column(gen, times, states)
    meta = {**meta_solver, **diag, "source": tuple(int(c) for c in x0)}
    return KernelColumn(source=tuple(int(c) for c in x0), times=times,
                        data=np.stack(states), shape=gen.shape, meta=meta)


def _dense_states(gen: DiscreteGenerator, u0: np.ndarray, times) -> list[np.ndarray]:
    S = symmetrized_dense(gen)
    w, Q = np.linalg.eigh(S)
    srt = np.sqrt(gen.theta_flat)
    y0 = Q.T @ (srt * u0)
    out = []
    for t in times:
        u = (Q @ (np.exp(w * t) * y0)) / srt
        out.append(u)
    return out


def dense_kernel_matrix(gen: DiscreteGenerator, t: float) -> np.ndarray:
    """Full p(t, x, y) matrix via eigendecomposition; small grids only."""
    S = symmetrized_dense(gen)
    w, Q = np.linalg.eigh(S)
    E = (Q * np.exp(w * t)) @ Q.T
    srt = np.sqrt(gen.theta_flat)
    return E / np.outer(srt, srt) / gen.cell_volume


def symmetry_deviation(col_a: KernelColumn, col_b: KernelColumn, t: float) -> float:
    """|p(t, x, y) - p(t, y, x)| from two columns with swapped roles."""
    if col_a.shape != col_b.shape:
        raise PairingError("columns live on different grids")
    shape = col_a.shape
    ia = int(np.ravel_multi_index(col_a.source, shape))
    ib = int(np.ravel_multi_index(col_b.source, shape))
    return float(abs(col_a.at(t)[ib] - col_b.at(t)[ia]))


def chapman_kolmogorov_check(col_s: KernelColumn, col_t: KernelColumn,
                             gen: DiscreteGenerator, s: float, t: float,
                             method: str = "auto") -> float:
    """Max deviation of p(s+t,x0,.) from sum_u p(s,x0,u) p(t,u,.) theta(u) h^d.

    Both columns must come from the same source on the same grid; col_s must
    store time s and col_t time s+t.  The composition is evaluated by evolving
    the time-s column for another t (dense oracle on small grids).
    """
    if col_s.source != col_t.source or col_s.shape != col_t.shape:
        raise PairingError("columns disagree on source or grid")
    if gen.shape != col_s.shape:
        raise PairingError("generator grid does not match the columns")
    u_s = col_s.at(s) if s > 0 else _delta_density(gen, col_s.source)[1]
    target = col_t.at(s + t)
    if t == 0:
        comp = u_s
    elif method == "dense" or (method == "auto" and gen.n <= 4096):
        comp = _dense_states(gen, u_s, [t])[0]
    else:
        comp = evolve(gen, u_s, [t], tol=1e-9)[0]
    return float(np.max(np.abs(comp - target)))


def perturbed_l2_check(gen: DiscreteGenerator, psi: np.ndarray, f: np.ndarray,
                       t: float, tol: float | None = 1e-9) -> dict:
    """Slack of the twisted L2 bound ||e^psi u_t||^2 <= e^(h(psi)^2 t) ||e^psi f||^2.

    Returns the slack (must be >= 0 up to roundoff for the bound to hold) and
    the rate h(psi)^2 used.  psi must be centered to keep e^psi in range.
    """
    psi = np.asarray(psi, dtype=float).ravel()
    if np.max(np.abs(psi)) > 300.0:
        raise ValueError("psi out of range for exp(); center it first")
    f = np.asarray(f, dtype=float).ravel()
    h2 = h_squared(gen, psi)
    u_t = evolve(gen, f, [t], tol=tol)[0]
    w = np.exp(psi)
    lhs = weighted_inner_product(gen, w * u_t, w * u_t)
    rhs = math.exp(h2 * t) * weighted_inner_product(gen, w * f, w * f)
    return {"slack": rhs - lhs, "h_squared": h2, "lhs": lhs, "rhs": rhs}


# ---------------------------------------------------------------------------
# walker simulation

@dataclass
class WalkerResult:
    counts: np.ndarray
    n_paths: int
    t: float
    source: tuple
    backend: str


def simulate_walkers(gen: DiscreteGenerator, x0, t: float, n_paths: int,
                     seed: int = 0) -> WalkerResult:
    """Exact continuous-time walks of the generator: rate L(x,y) jumps x -> y.

    The stationary reference is theta, matching the kernel normalization: the
    occupation law at time t is p(t, x0, y) theta(y) h^d.  Returns end-cell
    counts.  Uses the compiled kernel when built, numpy fallback otherwise.
    """
    if n_paths <= 0:
        raise ValueError("need a positive number of paths")
    i0 = gen.flat_index(x0)
    Loff = (gen.L - sp.diags(gen.L.diagonal())).tocsr()
    Loff.eliminate_zeros()
    indptr = Loff.indptr.astype(np.int64)
    indices = Loff.indices.astype(np.int64)
    data = np.ascontiguousarray(Loff.data, dtype=np.float64)
    rate = np.asarray(Loff.sum(axis=1)).ravel()
    counts = simulate_counts(indptr, indices, data, rate, i0, float(t),
                             int(n_paths), int(seed))
    return WalkerResult(counts=counts, n_paths=int(n_paths), t=float(t),
                        source=tuple(int(c) for c in x0), backend=backend_name())


def tv_to_column(result: WalkerResult, column: KernelColumn,
                 gen: DiscreteGenerator) -> dict:
    """Total-variation distance of walker end counts to the kernel law at t.

    Also returns the multinomial sampling bound (1/2) sum sqrt(q(1-q)/n),
    the expected-TV scale for n perfect samples of the same law.
    """
    q = column.at(result.t) * gen.theta_flat * gen.cell_volume
    q = np.clip(q, 0.0, None)
    q = q / q.sum()
    emp = result.counts / result.n_paths
    tv = 0.5 * float(np.abs(emp - q).sum())
    bound = 0.5 * float(np.sqrt(q * (1.0 - q) / result.n_paths).sum())
    return {"tv": tv, "multinomial_bound": bound, "ratio": tv / bound if bound > 0 else math.inf}
