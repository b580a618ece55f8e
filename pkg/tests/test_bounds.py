"""Inequality harnesses exercised on columns with known closed forms.

The workhorse fixture is a synthetic kernel column holding the exact
free-space Gaussian (4 pi t)^{-d/2} exp(-r^2/4t): every fitted constant then
has a closed-form target (c22 = c4 = 1/4, c21 = c3 = 1/(4 pi) in d = 2), and
deliberate corruptions give sharp negative controls.
"""

import math

import numpy as np
import pytest

from heatlab.bounds import (BoundFit, cross_consistency, harnack_constant,
                            maximal_inequality_probe, moser_kappa,
                            near_diagonal_floor, sobolev_probe, sobolev_rho,
                            verify_long_range, verify_lower,
                            verify_upper_euclidean, verify_upper_intrinsic)
from heatlab.env import EnvironmentSpec, EnvironmentField, generate_environment
from heatlab.errors import ConfigurationError, GeometryError, ModeError, PairingError
from heatlab.geometry import euclidean_distance_grid
from heatlab.heat import KernelColumn, heat_kernel_column
from heatlab.metric import intrinsic_distance_map
from heatlab.operators import assemble_generator

from conftest import make_constant_field, make_spec

FOUR_PI = 4.0 * math.pi


def unit_gen(N=32, L=8.0, theta_mode="lambda"):
    return assemble_generator(make_constant_field(N=N, L=L, theta_mode=theta_mode))


def gaussian_column(gen, times, source=None) -> KernelColumn:
    """Exact Gaussian values stamped into a column (no PDE solve)."""
    shape = gen.shape
    d = len(shape)
    if source is None:
        source = tuple(s // 2 for s in shape)
    r = euclidean_distance_grid(shape, source, gen.h).ravel()
    ts = np.asarray(sorted(times), dtype=float)
    data = np.stack([(FOUR_PI * t) ** (-d / 2) * np.exp(-r**2 / (4 * t))
                     for t in ts])
    return KernelColumn(source=tuple(source), times=ts, data=data, shape=shape)


class TestUpperEuclidean:
    def test_gaussian_constants_exact(self):
        # log(p t^{d/2}) = -log(4 pi) - u/4 is collinear in u = r^2/t, so the
        # envelope fit recovers the decay rate and prefactor exactly
        gen = unit_gen()
        col = gaussian_column(gen, [0.5, 1.0, 2.0, 4.0])
        bf = verify_upper_euclidean([col], [gen])
        assert bf.passed
        assert bf.constants["c22"] == pytest.approx(0.25, abs=1e-10)
        assert bf.constants["c21"] == pytest.approx(1.0 / FOUR_PI, rel=1e-10)

    def test_needs_lambda_mode(self):
        gen = unit_gen(theta_mode="unit")
        col = gaussian_column(gen, [1.0])
        with pytest.raises(ModeError):
            verify_upper_euclidean([col], [gen])

    def test_growing_tail_fails(self):
        # flipping the exponent sign makes the envelope slope positive,
        # so the fitted decay rate is negative and the check must fail
        gen = unit_gen()
        col = gaussian_column(gen, [0.5, 1.0, 2.0])
        r = euclidean_distance_grid(gen.shape, col.source, gen.h).ravel()
        bad = col.data * np.exp(r**2 / (2 * col.times[:, None]))
        corrupt = KernelColumn(col.source, col.times, bad, col.shape)
        bf = verify_upper_euclidean([corrupt], [gen])
        assert not bf.passed
        assert bf.constants["c22"] <= 0


class TestLower:
    def test_gaussian_constants_exact(self):
        gen = unit_gen()
        col = gaussian_column(gen, [0.5, 1.0, 2.0, 4.0])
        bf = verify_lower([col], [gen])
        assert bf.passed
        assert bf.constants["c4"] == pytest.approx(0.25, abs=1e-10)
        assert bf.constants["c3"] == pytest.approx(1.0 / FOUR_PI, rel=1e-9)
        assert bf.meta["stable"]

    def test_vanishing_kernel_fails(self):
        gen = unit_gen()
        col = gaussian_column(gen, [0.5, 1.0, 2.0, 4.0])
        src = int(np.ravel_multi_index(col.source, col.shape))
        col.data[-1, src] = 0.0   # kill the on-diagonal value at the top time
        bf = verify_lower([col], [gen])
        assert not bf.passed
        assert "vanishes" in bf.meta["reason"]

    def test_needs_lambda_mode(self):
        gen = unit_gen(theta_mode="unit")
        col = gaussian_column(gen, [1.0])
        with pytest.raises(ModeError):
            verify_lower([col], [gen])


class TestUpperIntrinsic:
    def _case(self, times=(0.5, 1.0, 2.0, 4.0)):
        field = make_constant_field(N=32, L=8.0, theta_mode="lambda")
        gen = assemble_generator(field)
        src = (16, 16)
        met = intrinsic_distance_map(field, src, neighborhood=16)
        col = gaussian_column(gen, times, source=src)
        return col, met, gen

    def test_gaussian_sup_flat(self):
        # with a = I the compensated statistic peaks at the source for every
        # t, so the sup sequence is constant and the trend slope is zero
        col, met, gen = self._case()
        bf = verify_upper_intrinsic([col], [met], [gen], gamma=0.0)
        assert bf.passed
        assert abs(bf.meta["trend_slope"]) < 1e-10
        assert bf.constants["c1"] == pytest.approx(1.0 / FOUR_PI, rel=1e-10)
        assert bf.meta["dyadic"]

    def test_fitted_gamma_clamps_to_zero(self):
        # the statistic decreases with distance while the polynomial term
        # grows, so the covariance fit lands at the gamma >= 0 boundary
        col, met, gen = self._case()
        bf = verify_upper_intrinsic([col], [met], [gen])
        assert bf.constants["gamma"] == 0.0

    def test_non_dyadic_flagged(self):
        col, met, gen = self._case(times=(0.5, 0.9, 4.0))
        bf = verify_upper_intrinsic([col], [met], [gen], gamma=0.0)
        assert not bf.meta["dyadic"]

    def test_source_mismatch(self):
        field = make_constant_field(N=32, L=8.0, theta_mode="lambda")
        gen = assemble_generator(field)
        met = intrinsic_distance_map(field, (0, 0), neighborhood=8)
        col = gaussian_column(gen, [1.0], source=(16, 16))
        with pytest.raises(PairingError):
            verify_upper_intrinsic([col], [met], [gen])


class TestFloorAndHarnack:
    def test_constant_env_value(self):
        field = make_constant_field(theta_mode="lambda")
        C = harnack_constant(field, (8, 8), 1.0)
        assert C == pytest.approx(FOUR_PI * math.e, rel=1e-12)

    def test_monotone_in_shape_constants(self):
        field = make_constant_field(theta_mode="lambda")
        base = harnack_constant(field, (8, 8), 1.0)
        assert harnack_constant(field, (8, 8), 1.0, c12=2.0) > base
        spec = EnvironmentSpec(d=2, L=4.0, N=16, R_dep=0.5)
        shape = spec.shape
        a = np.full((2,) + shape, 4.0)
        big = EnvironmentField(spec=spec, a=a, theta=np.full(shape, 4.0),
                               lam=np.full(shape, 4.0), Lam=np.full(shape, 4.0))
        # norms above 1 make the constant strictly increasing in kappa
        assert harnack_constant(big, (8, 8), 1.0, kappa=2.0) \
            > harnack_constant(big, (8, 8), 1.0, kappa=1.0)

    def test_ball_exceeds_box(self):
        field = make_constant_field()
        with pytest.raises(GeometryError):
            harnack_constant(field, (8, 8), 3.0)

    def test_floor_on_computed_kernel(self):
        # p(t,x,.) >= (4 pi t e^{1/16})^{-1} on B(x, sqrt t/2) for the unit
        # medium; the measured margin is e^{1 - 1/16} up to O(h^2)
        gen = unit_gen()
        col = heat_kernel_column(gen, (16, 16), (1.0,), tol=1e-8)
        rep = near_diagonal_floor(col, gen, 1.0)
        assert rep["passed"]
        assert rep["C_PH"] == pytest.approx(FOUR_PI * math.e, rel=1e-12)
        assert rep["margin"] == pytest.approx(math.exp(1 - 1 / 16), rel=0.05)
        assert rep["cells"] == 13

    def test_floor_guards(self):
        gen = unit_gen()
        col = heat_kernel_column(gen, (16, 16), (1.0,), tol=1e-8)
        with pytest.raises(GeometryError):
            near_diagonal_floor(col, gen, 4.5)   # sqrt(t)/2 > L/8
        gen_u = unit_gen(theta_mode="unit")
        col_u = gaussian_column(gen_u, [1.0])
        with pytest.raises(ModeError):
            near_diagonal_floor(col_u, gen_u, 1.0)


class TestLongRange:
    times = (0.01, 0.04, 0.16, 0.64)

    def _sup(self, n, r2):
        # the ratio statistic is decreasing in t, so the sup sits at the
        # per-pair floor t = 0.01 r^2
        t = 0.01 * r2
        return -math.log(FOUR_PI * t) + r2 / (4 * t) - 2 * math.log(n)

    def test_gaussian_sups_match_closed_form(self):
        gen = unit_gen()
        col = gaussian_column(gen, self.times, source=(16, 16))
        bf = verify_long_range([col], [gen], scales=[1, 2], targets=[(1.0, 0.0)])
        assert bf.passed
        assert bf.meta["sup_by_n"][1] == pytest.approx(self._sup(1, 1.0), abs=1e-9)
        assert bf.meta["sup_by_n"][2] == pytest.approx(self._sup(2, 4.0), abs=1e-9)
        assert bf.constants["c23"] == pytest.approx(math.exp(self._sup(1, 1.0)),
                                                    rel=1e-6)

    def test_boosted_far_scale_fails(self):
        gen = unit_gen()
        col = gaussian_column(gen, self.times, source=(16, 16))
        idx = int(np.ravel_multi_index((24, 16), col.shape))  # the n=2 target
        col.data[:, idx] *= math.exp(10.0)
        bf = verify_long_range([col], [gen], scales=[1, 2], targets=[(1.0, 0.0)])
        assert not bf.passed
        assert not bf.meta["non_increasing"]

    def test_geometry_guards(self):
        gen = unit_gen()
        col = gaussian_column(gen, self.times, source=(16, 16))
        with pytest.raises(GeometryError):
            verify_long_range([col], [gen], scales=[1], targets=[(3.0, 0.0)])
        with pytest.raises(GeometryError):
            verify_long_range([col], [gen], scales=[3], targets=[(1.0, 0.0)])

    def test_needs_lambda_mode(self):
        gen = unit_gen(theta_mode="unit")
        col = gaussian_column(gen, self.times)
        with pytest.raises(ModeError):
            verify_long_range([col], [gen], scales=[1], targets=[(1.0, 0.0)])


class TestSobolev:
    def test_rho_closed_forms(self):
        assert sobolev_rho(3, 20.0) == pytest.approx(60.0 / 23.0, rel=1e-14)
        for q in (2.0, 6.0, 11.0):
            assert sobolev_rho(2, q) == pytest.approx(q, rel=1e-14)

    def test_rho_degenerate(self):
        with pytest.raises(ConfigurationError):
            sobolev_rho(1, 2.0)

    def test_probe_on_random_env(self, small_field):
        gen = assemble_generator(small_field)
        rng = np.random.default_rng(3)
        trials = [rng.normal(size=small_field.shape) for _ in range(4)]
        rep = sobolev_probe(gen, (8, 8), 1.5, trials)
        assert rep["passed"]
        assert rep["n_trials"] == 4
        assert rep["rho"] == pytest.approx(6.0)
        assert rep["r_star"] == pytest.approx(1.2)
        assert all(np.isfinite(r) and r >= 0 for r in rep["ratios"])

    def test_probe_guards(self, small_field):
        gen = assemble_generator(small_field)
        trials = [np.ones(small_field.shape)]
        with pytest.raises(ConfigurationError):
            sobolev_probe(gen, (8, 8), 1.5, trials, r_exp=1.0)
        with pytest.raises(ConfigurationError):
            sobolev_probe(gen, (8, 8), 1.5, trials, r_exp=6.0, q=1.1)
        with pytest.raises(GeometryError):
            sobolev_probe(gen, (8, 8), 2.5, trials)


class TestMoserKappa:
    def test_closed_form(self):
        # p* = 2, r* = 6/5, rho = 6 -> alpha = 13/10, kappa = 13/3
        assert moser_kappa(2.0, 6.0, 6.0, 2) == pytest.approx(13.0 / 3.0,
                                                              rel=1e-14)

    def test_weak_exponents_rejected(self):
        with pytest.raises(ConfigurationError):
            moser_kappa(1.1, 2.0, 1.5, 3)


class TestMaximalProbe:
    def _gen(self):
        spec = EnvironmentSpec(d=2, L=4.0, N=16, R_dep=0.5, theta_mode="lambda",
                               p=2.0, q=6.0, r=6.0)
        shape = spec.shape
        ones = np.ones(shape)
        field = EnvironmentField(spec=spec, a=np.ones((2,) + shape),
                                 theta=ones.copy(), lam=ones.copy(),
                                 Lam=ones.copy())
        return assemble_generator(field)

    def _psi(self, gen):
        ii = np.indices(gen.shape)
        x = ii * gen.h
        return 0.3 * np.sin(2 * np.pi * x[0] / 4.0) \
            * np.cos(2 * np.pi * x[1] / 4.0)

    def test_constant_env_passes(self):
        gen = self._gen()
        rep = maximal_inequality_probe(gen, self._psi(gen), n=1.0)
        assert rep["passed"] and rep["ratio"] <= 1.0
        assert rep["kappa"] == pytest.approx(13.0 / 3.0)
        assert rep["h_psi_sq"] >= 0
        assert rep["cylinder"]["n"] == 1.0

    def test_parameter_guards(self):
        gen = self._gen()
        psi = self._psi(gen)
        with pytest.raises(ConfigurationError):
            maximal_inequality_probe(gen, psi, n=1.0, sigma_p=0.4)
        with pytest.raises(ConfigurationError):
            maximal_inequality_probe(gen, psi, n=1.0, eps=0.3)
        with pytest.raises(ConfigurationError):
            maximal_inequality_probe(gen, psi, n=1.0, delta=1.5)
        with pytest.raises(GeometryError):
            maximal_inequality_probe(gen, psi, n=3.0)
        with pytest.raises(ConfigurationError):
            maximal_inequality_probe(gen, psi, n=1.0,
                                     f0=-np.ones(gen.shape))


def _fit(passed):
    return BoundFit(tag="t", constants={}, t_range=(0.0, 1.0),
                    r_range=(0.0, 1.0), worst_log_ratio=0.0, burn_in=None,
                    passed=passed)


@pytest.mark.parametrize("intr,eucl,ok", [
    (True, True, True), (True, False, False),
    (False, True, True), (False, False, True),
])
def test_cross_consistency_implication(intr, eucl, ok):
    rep = cross_consistency(_fit(intr), _fit(eucl))
    assert rep["implication_holds"] is ok


def test_boundfit_summary():
    s = _fit(True).summary()
    assert "PASS" in s and "[t]" in s
    assert "FAIL" in _fit(False).summary()
