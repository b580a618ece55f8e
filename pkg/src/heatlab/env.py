"""Degenerate random environments on a periodic box.

A field assigns to every grid cell a diagonal conductance tensor a(x) =
diag(a_1, ..., a_d) and a speed measure theta(x) > 0.  The per-cell
ellipticity numbers are lam = min_i a_i and Lam = max_i a_i.  The design
goals, in order:

* finite dependence range: cells farther apart than R_dep (periodic max-norm
  distance) are functions of disjoint random inputs;
* exact, analytically known marginals: each diagonal entry is the product of
  a Pareto upper-tail factor hi >= 1 (index tail_hi) and a reciprocal-Pareto
  lower-tail factor 0 < lo <= 1 (index tail_lo), so moment finiteness is a
  closed-form statement about the tail indices;
* refinement stability: the same (L, R_dep, seed) produces samples of the
  same continuum field at every resolution N, which the metric and kernel
  refinement studies rely on.

Both noise models (checkerboard blocks and Poisson blobs) build a smooth
Gaussian base field and normalize per cell by its exact standard deviation,
so the copula transform Phi -> Pareto quantile is exact at every cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, asdict

import numpy as np
from scipy import fft as sp_fft
from scipy.special import ndtr

from . import util
from .errors import GeometryError, MomentMarginError, SpecValidationError
from .geometry import ball_mask, chebyshev_distance_grid

MOMENT_MARGIN = 1.10
ERGODIC_FACTOR = 2.0

_MODELS = ("checkerboard", "blob")
_THETA_MODES = ("unit", "lambda", "independent")
_COUPLINGS = ("independent", "shared")


@dataclass(frozen=True)
class EnvironmentSpec:
    """Full description of a random environment; hashable and serializable."""

    d: int
    L: float
    N: int
    R_dep: float
    model: str = "checkerboard"
    tail_hi: float | None = None
    tail_lo: float | None = None
    theta_mode: str = "unit"
    tail_theta: float | None = None
    axis_coupling: str = "independent"
    p: float = 2.0
    q: float = 2.0
    r: float = 1.0
    regime: str | None = None
    blob_intensity: float = 2.0
    seed: int = 0

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    def validate(self) -> None:
        validate_spec(self)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EnvironmentSpec":
        return cls(**data)


def validate_spec(spec: EnvironmentSpec) -> None:
    if spec.d not in (2, 3):
        raise SpecValidationError(f"dimension must be 2 or 3, got {spec.d}")
    if spec.N < 8:
        raise SpecValidationError(f"need at least 8 cells per side, got {spec.N}")
    if not (spec.L > 0):
        raise SpecValidationError("box side must be positive")
    h = spec.h
    if spec.R_dep < 2 * h - 1e-12:
        raise SpecValidationError(
            f"dependence range R_dep={spec.R_dep} below twice the grid scale h={h}"
        )
    if spec.R_dep > spec.L / 4 + 1e-12:
        raise GeometryError(
            f"dependence range R_dep={spec.R_dep} exceeds L/4={spec.L / 4}; "
            "independence tests need room in the box"
        )
    if spec.model not in _MODELS:
        raise SpecValidationError(f"unknown model {spec.model!r}")
    if spec.theta_mode not in _THETA_MODES:
        raise SpecValidationError(f"unknown theta mode {spec.theta_mode!r}")
    if spec.axis_coupling not in _COUPLINGS:
        raise SpecValidationError(f"unknown axis coupling {spec.axis_coupling!r}")
    if spec.theta_mode == "independent" and spec.tail_theta is None:
        raise SpecValidationError("theta_mode 'independent' requires tail_theta")
    if not (spec.p > 1 and spec.q > 1 and spec.r >= 1):
        raise SpecValidationError(
            f"moment exponents need p>1, q>1, r>=1, got p={spec.p} q={spec.q} r={spec.r}"
        )
    for name, alpha in (("tail_hi", spec.tail_hi), ("tail_lo", spec.tail_lo),
                        ("tail_theta", spec.tail_theta)):
        if alpha is not None and alpha <= 0:
            raise SpecValidationError(f"{name} must be positive, got {alpha}")

    # tail indices must cover the requested moments with a 10% margin
    need_hi = spec.p
    if spec.theta_mode == "lambda":
        need_hi = max(need_hi, spec.r)
    if spec.tail_hi is not None and spec.tail_hi < MOMENT_MARGIN * need_hi:
        raise MomentMarginError(
            f"tail_hi={spec.tail_hi} gives E[Lam^{need_hi}] too little margin; "
            f"need >= {MOMENT_MARGIN * need_hi:.3f}"
        )
    if spec.tail_lo is not None and spec.tail_lo < MOMENT_MARGIN * spec.q:
        raise MomentMarginError(
            f"tail_lo={spec.tail_lo} gives E[lam^-{spec.q}] too little margin; "
            f"need >= {MOMENT_MARGIN * spec.q:.3f}"
        )
    if spec.tail_theta is not None and spec.tail_theta < MOMENT_MARGIN * spec.r:
        raise MomentMarginError(
            f"tail_theta={spec.tail_theta} gives E[theta^{spec.r}] too little margin; "
            f"need >= {MOMENT_MARGIN * spec.r:.3f}"
        )

    if spec.regime is not None:
        check_regime(spec.regime, spec.d, spec.p, spec.q, spec.r)


def check_regime(regime: str, d: int, p: float, q: float, r: float) -> float:
    """Verify a moment-regime inequality; returns the slack (must be > 0).

    M2: 1/p + 1/q < 2/d (time-independent speed measure).
    M1: 1/r + 1/q + (1/(p-1)) * ((r-1)/r) < 2/d (general theta).
    """
    if regime == "M2":
        lhs = 1.0 / p + 1.0 / q
    elif regime == "M1":
        lhs = 1.0 / r + 1.0 / q + (1.0 / (p - 1.0)) * ((r - 1.0) / r)
    else:
        raise SpecValidationError(f"unknown regime {regime!r}")
    slack = 2.0 / d - lhs
    if slack <= 0:
        raise MomentMarginError(
            f"regime {regime} fails for d={d}: lhs={lhs:.4f} >= 2/d={2.0 / d:.4f}"
        )
    return slack


# ---------------------------------------------------------------------------
# closed-form Pareto moments of the marginal factors

def hi_moment(alpha: float | None, m: float) -> float:
    """E[X^m] for X = U^(-1/alpha), U uniform: alpha/(alpha-m), inf if m >= alpha."""
    if alpha is None:
        return 1.0
    if m >= alpha:
        return math.inf
    return alpha / (alpha - m)


def lo_moment(alpha: float | None, m: float) -> float:
    """E[Y^m] for Y = U^(1/alpha), U uniform: alpha/(alpha+m), inf if m <= -alpha."""
    if alpha is None:
        return 1.0
    if m <= -alpha:
        return math.inf
    return alpha / (alpha + m)


def entry_moment(spec: EnvironmentSpec, m: float) -> float:
    """Exact E[a_i(x)^m] for one diagonal entry."""
    return hi_moment(spec.tail_hi, m) * lo_moment(spec.tail_lo, m)


def analytic_moments(spec: EnvironmentSpec) -> dict:
    """Closed-form moment values/bounds implied by the tail indices.

    In 'shared' axis coupling lam = Lam = a, so the entries tagged exact are
    exact expectations.  With independent axes, max/min over the axes makes
    E[Lam^p] and E[lam^-q] upper-bounded by d times the per-entry value.
    """
    exact = spec.axis_coupling == "shared" or spec.d == 1
    lam_p = entry_moment(spec, spec.p)
    lam_inv_q = entry_moment(spec, -spec.q)
    if spec.theta_mode == "unit":
        theta_r = 1.0
        theta_inv = 1.0
    elif spec.theta_mode == "lambda":
        theta_r = entry_moment(spec, spec.r)
        theta_inv = entry_moment(spec, -1.0)
    else:
        theta_r = hi_moment(spec.tail_theta, spec.r)
        theta_inv = hi_moment(spec.tail_theta, -1.0)
    mult = 1.0 if exact else float(spec.d)
    return {
        "E_Lam_p": lam_p * mult,
        "E_lam_inv_q": lam_inv_q * mult,
        "E_theta_r": theta_r if exact or spec.theta_mode != "lambda" else theta_r * mult,
        "E_theta_inv": theta_inv,
        "E_entry_p": lam_p,
        "exact": exact,
    }


# ---------------------------------------------------------------------------
# smooth standard-normal base fields

def _block_geometry(spec: EnvironmentSpec) -> tuple[int, int]:
    """(cells per block side m, blocks per side) with m | N and m*h <= R_dep/2."""
    h = spec.h
    m_max = int(math.floor(spec.R_dep / (2.0 * h) + 1e-9))
    m_max = max(1, min(m_max, spec.N))
    m = 1
    for cand in range(m_max, 0, -1):
        if spec.N % cand == 0:
            m = cand
            break
    return m, spec.N // m


def _mollifier_1d(spec: EnvironmentSpec) -> np.ndarray | None:
    """Quartic bump weights at cell offsets, support radius R_dep/4; None = identity."""
    h = spec.h
    rho = spec.R_dep / 4.0
    rc = int(math.floor(rho / h + 1e-9))
    if rc == 0:
        return None
    u = np.arange(-rc, rc + 1) * h
    w = (1.0 - (u / rho) ** 2) ** 2
    w[np.abs(u) >= rho] = 0.0
    return w


def _wrap_kernel(shape, w1: np.ndarray) -> np.ndarray:
    """Place the separable kernel prod_i w1 at the origin of a periodic grid."""
    d = len(shape)
    rc = (len(w1) - 1) // 2
    K = w1.copy()
    for _ in range(d - 1):
        K = np.multiply.outer(K, w1)
    grid = np.zeros(shape)
    idx = [(np.arange(-rc, rc + 1)) % n for n in shape]
    grid[np.ix_(*idx)] = K
    return grid


def _fold_block_sum(arr: np.ndarray, m: int) -> np.ndarray:
    """Sum arr over the block lattice: out[tau] = sum_j arr[m*j + tau]."""
    d = arr.ndim
    n_b = arr.shape[0] // m
    resh = arr.reshape(*sum(((n_b, m) for _ in range(d)), ()))
    return resh.sum(axis=tuple(range(0, 2 * d, 2)))


def _checkerboard_standard(spec: EnvironmentSpec, comp_id: int) -> np.ndarray:
    """Exactly N(0,1) per cell: mollified iid block noise, per-cell normalized."""
    m, n_b = _block_geometry(spec)
    rng = util.substream(spec.seed, comp_id)
    G = rng.standard_normal(size=(n_b,) * spec.d)
    V = G
    for ax in range(spec.d):
        V = np.repeat(V, m, axis=ax)
    w1 = _mollifier_1d(spec)
    if w1 is None:
        return V
    Kg = _wrap_kernel(spec.shape, w1)
    Kf = sp_fft.rfftn(Kg)
    U = sp_fft.irfftn(sp_fft.rfftn(V) * Kf, s=spec.shape)
    ind = np.zeros(spec.shape)
    ind[(slice(0, m),) * spec.d] = 1.0
    A = sp_fft.irfftn(sp_fft.rfftn(ind) * Kf, s=spec.shape)
    tile_var = _fold_block_sum(A * A, m)
    sigma = np.sqrt(np.tile(tile_var, (n_b,) * spec.d))
    return U / sigma


class _BlobGeometry:
    """Bump positions and per-cell weight tables shared by all components."""

    def __init__(self, spec: EnvironmentSpec):
        rng = util.substream(spec.seed, util.STREAM_BLOB_POINTS)
        rho = spec.R_dep / 2.0
        vol_units = (spec.L / rho) ** spec.d
        n_pois = int(rng.poisson(spec.blob_intensity * vol_units))
        pois = rng.uniform(0.0, spec.L, size=(n_pois, spec.d))
        # deterministic comb guarantees positive local variance everywhere
        n_c = int(math.ceil(spec.L / rho))
        s_c = spec.L / n_c
        axes = [np.arange(n_c) * s_c + 0.5 * s_c for _ in range(spec.d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        comb = np.stack([m.ravel() for m in mesh], axis=1)
        self.centers = np.concatenate([pois, comb], axis=0)
        self.n_bumps = self.centers.shape[0]
        self.spec = spec
        self._tables = None

    def weight_tables(self):
        """For each bump: (cell index arrays, separable weights), plus sum w^2."""
        if self._tables is not None:
            return self._tables
        spec = self.spec
        h, N, rho = spec.h, spec.N, spec.R_dep / 2.0
        denom2 = np.zeros(spec.shape)
        tables = []
        for cpos in self.centers:
            axes_idx, axes_w = [], []
            for ax in range(spec.d):
                lo = int(math.floor((cpos[ax] - rho) / h - 0.5))
                hi = int(math.ceil((cpos[ax] + rho) / h + 0.5))
                cells = np.arange(lo, hi + 1)
                u = (cells + 0.5) * h - cpos[ax]
                w = (1.0 - (u / rho) ** 2) ** 2
                keep = np.abs(u) < rho
                axes_idx.append(cells[keep] % N)
                axes_w.append(w[keep])
            if any(len(ix) == 0 for ix in axes_idx):
                tables.append(None)
                continue
            W = axes_w[0]
            for w in axes_w[1:]:
                W = np.multiply.outer(W, w)
            tables.append((tuple(np.ix_(*axes_idx)), W))
            denom2[tuple(np.ix_(*axes_idx))] += W * W
        self._tables = (tables, denom2)
        return self._tables


def _blob_standard(spec: EnvironmentSpec, comp_id: int, geom: _BlobGeometry) -> np.ndarray:
    """Poisson bump superposition with iid normal amplitudes, normalized per cell."""
    tables, denom2 = geom.weight_tables()
    rng = util.substream(spec.seed, util.STREAM_BLOB_AMPS, comp_id)
    amps = rng.standard_normal(geom.n_bumps)
    num = np.zeros(spec.shape)
    for amp, tab in zip(amps, tables):
        if tab is None:
            continue
        ix, W = tab
        num[ix] += amp * W
    return num / np.sqrt(denom2)


# ---------------------------------------------------------------------------
# field assembly

@dataclass
class EnvironmentField:
    """Sampled environment: diagonal tensor entries, speed measure, ellipticity."""

    spec: EnvironmentSpec
    a: np.ndarray          # shape (d, N, ..., N)
    theta: np.ndarray      # shape (N, ..., N)
    lam: np.ndarray
    Lam: np.ndarray

    @property
    def h(self) -> float:
        return self.spec.h

    @property
    def shape(self) -> tuple:
        return self.theta.shape

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))


def _standard_field(spec: EnvironmentSpec, comp_id: int, geom) -> np.ndarray:
    if spec.model == "checkerboard":
        return _checkerboard_standard(spec, comp_id)
    return _blob_standard(spec, comp_id, geom)


def generate_environment(spec: EnvironmentSpec) -> EnvironmentField:
    """Sample the environment described by `spec` (deterministic in the seed)."""
    validate_spec(spec)
    geom = _BlobGeometry(spec) if spec.model == "blob" else None

    def pareto_hi(z, alpha):
        # survival function keeps precision in the deep tail
        return ndtr(-z) ** (-1.0 / alpha)

    def pareto_lo(z, alpha):
        return ndtr(-z) ** (1.0 / alpha)

    a = np.empty((spec.d,) + spec.shape)
    shared = spec.axis_coupling == "shared"
    for i in range(spec.d):
        ih = 0 if shared else i
        if spec.tail_hi is not None:
            z = _standard_field(spec, util.STREAM_AXIS_HI + ih, geom)
            hi = pareto_hi(z, spec.tail_hi)
        else:
            hi = 1.0
        if spec.tail_lo is not None:
            z = _standard_field(spec, util.STREAM_AXIS_LO + ih, geom)
            lo = pareto_lo(z, spec.tail_lo)
        else:
            lo = 1.0
        entry = hi * lo if (spec.tail_hi is not None or spec.tail_lo is not None) \
            else np.ones(spec.shape)
        a[i] = entry
        if shared:
            for j in range(1, spec.d):
                a[j] = a[0]
            break

    lam = a.min(axis=0)
    Lam = a.max(axis=0)
    if spec.theta_mode == "unit":
        theta = np.ones(spec.shape)
    elif spec.theta_mode == "lambda":
        theta = Lam.copy()
    else:
        z = _standard_field(spec, util.STREAM_THETA, geom)
        theta = pareto_hi(z, spec.tail_theta)

    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(theta)):
        raise SpecValidationError("non-finite field values generated (tail too heavy?)")
    return EnvironmentField(spec=spec, a=a, theta=theta, lam=lam, Lam=Lam)


# ---------------------------------------------------------------------------
# ball norms and moment statistics

def ball_norm(values: np.ndarray, mask: np.ndarray, p: float,
              weight: np.ndarray | None = None) -> float:
    """((1/|B|) sum_B |f|^p w h^d)^(1/p) with |B| = (#cells) h^d.

    The h^d factors cancel, so this is a weighted cell average.  `weight`
    carries the speed measure when a theta-weighted norm is needed.
    """
    if p <= 0:
        raise ValueError("ball norm exponent must be positive")
    if not mask.any():
        raise GeometryError("empty ball (radius below grid scale)")
    v = np.abs(values[mask]) ** p
    if weight is not None:
        v = v * weight[mask]
    return float(v.mean() ** (1.0 / p))


def a_script(field: EnvironmentField, center, n: float,
             p: float | None = None, q: float | None = None,
             r: float | None = None) -> float:
    """Ball-average functional ||1 v (Lam/theta)||_{p,B,theta} ||1 v 1/lam||_{q,B} ||1 v theta||_{r,B}.

    Controls the constants of the caloric maximal inequality on B(center, n).
    """
    spec = field.spec
    p = spec.p if p is None else p
    q = spec.q if q is None else q
    r = spec.r if r is None else r
    mask = ball_mask(field.shape, center, n, field.h)
    t1 = ball_norm(np.maximum(1.0, field.Lam / field.theta), mask, p, weight=field.theta)
    t2 = ball_norm(np.maximum(1.0, 1.0 / field.lam), mask, q)
    t3 = ball_norm(np.maximum(1.0, field.theta), mask, r)
    return t1 * t2 * t3


@dataclass
class MomentReport:
    """Empirical moments, their analytic counterparts, and ergodic ball curves."""

    box_moments: dict
    analytic: dict
    radii: np.ndarray
    curve_Lam_p: np.ndarray       # (centers, radii) ball averages of Lam^p
    curve_lam_inv_q: np.ndarray   # ball averages of lam^-q
    N1_hat: float | None
    factor: float = ERGODIC_FACTOR
    notes: dict = dc_field(default_factory=dict)


def environment_stats(field: EnvironmentField, centers=None,
                      radii=None) -> MomentReport:
    """Box moments and the ergodic ball-average control radius N1_hat.

    N1_hat is the smallest tested radius from which on (at every tested
    center and every larger radius) the ball averages of Lam^p and lam^-q
    stay below ERGODIC_FACTOR times their box averages.
    """
    spec = field.spec
    L, h = spec.L, field.h
    if centers is None:
        k = spec.N // 2
        centers = [tuple(0 for _ in range(spec.d)), (k,) * spec.d]
    if radii is None:
        radii = []
        rad = 2 * h
        while rad <= L / 4 + 1e-12:
            radii.append(rad)
            rad *= 2
    radii = np.asarray(sorted(radii), dtype=float)

    lam_p_field = field.Lam ** spec.p
    lam_inv_q_field = field.lam ** (-spec.q)
    box = {
        "Lam_p": float(lam_p_field.mean()),
        "lam_inv_q": float(lam_inv_q_field.mean()),
        "theta_r": float((field.theta ** spec.r).mean()),
        "theta_inv": float((1.0 / field.theta).mean()),
    }

    cl, ci = [], []
    for c in centers:
        row_l, row_i = [], []
        for rad in radii:
            mask = ball_mask(field.shape, c, rad, h)
            row_l.append(lam_p_field[mask].mean())
            row_i.append(lam_inv_q_field[mask].mean())
        cl.append(row_l)
        ci.append(row_i)
    curve_l = np.array(cl)
    curve_i = np.array(ci)

    n1 = None
    for j in range(len(radii)):
        ok_l = np.all(curve_l[:, j:] <= ERGODIC_FACTOR * box["Lam_p"])
        ok_i = np.all(curve_i[:, j:] <= ERGODIC_FACTOR * box["lam_inv_q"])
        if ok_l and ok_i:
            n1 = float(radii[j])
            break

    return MomentReport(
        box_moments=box,
        analytic=analytic_moments(spec),
        radii=radii,
        curve_Lam_p=curve_l,
        curve_lam_inv_q=curve_i,
        N1_hat=n1,
        notes={"centers": [tuple(int(x) for x in c) for c in centers]},
    )


def pair_correlation(field: EnvironmentField, min_dist: float,
                     n_pairs: int = 20000, seed: int = 1) -> float:
    """Empirical correlation of Lam between cells at periodic max-norm
    distance > min_dist; should be statistically zero beyond R_dep."""
    rng = np.random.default_rng(seed)
    shape = field.shape
    flat = field.Lam.ravel()
    origin = tuple(0 for _ in shape)
    dist = chebyshev_distance_grid(shape, origin, field.h)
    offsets = np.argwhere(dist > min_dist + 1e-12)
    if len(offsets) == 0:
        raise GeometryError(f"no cell offsets farther than {min_dist}")
    xs = np.stack([rng.integers(0, n, size=n_pairs) for n in shape], axis=1)
    offs = offsets[rng.integers(0, len(offsets), size=n_pairs)]
    ys = (xs + offs) % np.array(shape)
    ix = np.ravel_multi_index(tuple(xs.T), shape)
    iy = np.ravel_multi_index(tuple(ys.T), shape)
    va, vb = flat[ix], flat[iy]
    va = va - va.mean()
    vb = vb - vb.mean()
    denom = math.sqrt(float((va**2).mean() * (vb**2).mean()))
    if denom == 0:
        return 0.0
    return float((va * vb).mean() / denom)
