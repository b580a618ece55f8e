"""Environment sampling: spec validation, closed-form moments, dependence range.

The marginal laws have exact Pareto-type moments, so the Monte Carlo checks
here compare field averages against closed forms rather than against another
sampler.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatlab.env import (EnvironmentSpec, analytic_moments, check_regime,
                         environment_stats, generate_environment, hi_moment,
                         lo_moment, pair_correlation, validate_spec)
from heatlab.errors import (GeometryError, MomentMarginError,
                            SpecValidationError)

from conftest import make_spec


class TestSpecValidation:
    def test_valid_spec_passes(self):
        validate_spec(make_spec())

    def test_dimension_must_be_2_or_3(self):
        with pytest.raises(SpecValidationError):
            validate_spec(make_spec(d=4))

    def test_too_few_cells(self):
        with pytest.raises(SpecValidationError):
            validate_spec(make_spec(N=4))

    def test_dependence_range_below_grid_scale(self):
        # R_dep must span at least two cells or blocks degenerate
        with pytest.raises(SpecValidationError):
            validate_spec(make_spec(R_dep=0.1))

    def test_dependence_range_crowds_the_box(self):
        with pytest.raises(GeometryError):
            validate_spec(make_spec(R_dep=2.0))

    def test_unknown_theta_mode(self):
        with pytest.raises(SpecValidationError):
            validate_spec(make_spec(theta_mode="fancy"))

    def test_tail_margin_hi(self):
        # theta = Lambda makes E[Lam^r] load-bearing: tail_hi must clear
        # 1.1 * max(p, r) = 6.6
        with pytest.raises(MomentMarginError):
            validate_spec(make_spec(tail_hi=6.0, r=6.0))
        validate_spec(make_spec(tail_hi=7.0, r=6.0))

    def test_tail_margin_lo(self):
        with pytest.raises(MomentMarginError):
            validate_spec(make_spec(tail_lo=5.0, q=6.0))

    def test_independent_theta_needs_tail(self):
        with pytest.raises(SpecValidationError):
            validate_spec(make_spec(theta_mode="independent"))

    def test_regime_m2(self):
        # 1/p + 1/q < 2/d: p=2, q=6 in d=2 gives slack 1 - 2/3 = 1/3
        assert check_regime("M2", 2, 2.0, 6.0, 1.0) == pytest.approx(1 / 3)
        with pytest.raises(MomentMarginError):
            check_regime("M2", 3, 2.0, 6.0, 1.0)

    def test_regime_m1_closed_form(self):
        # 1/r + 1/q + (r-1)/(r(p-1)) for p=3, q=12, r=2 in d=2:
        # 0.5 + 1/12 + 0.25 = 5/6 < 1
        assert check_regime("M1", 2, 3.0, 12.0, 2.0) == pytest.approx(1 - 5 / 6)


class TestClosedFormMoments:
    def test_hi_moment_value(self):
        # E[F^m] = alpha/(alpha - m) for the U^(-1/alpha) marginal
        assert hi_moment(8.0, 2.0) == pytest.approx(8.0 / 6.0)
        assert hi_moment(None, 2.0) == 1.0

    def test_hi_moment_diverges_at_alpha(self):
        assert hi_moment(2.0, 2.0) == np.inf

    def test_lo_moment_value(self):
        # E[F^-m] = alpha/(alpha + m) with F = U^(1/alpha)... inverted sign
        assert lo_moment(8.0, -2.0) == pytest.approx(8.0 / 6.0)

    def test_field_average_within_analytic_bracket(self):
        # independent axes: entry moment <= E[Lam^p] <= d * entry moment;
        # one large realization, ~N_blocks independent dof
        spec = make_spec(seed=3, N=128, L=32.0)
        field = generate_environment(spec)
        ana = analytic_moments(spec)
        emp = float((field.Lam ** spec.p).mean())
        assert ana["E_entry_p"] * 0.9 <= emp <= ana["E_Lam_p"] * 1.1
        assert not ana["exact"]

    def test_entry_moment_is_product_of_factors(self):
        spec = make_spec(seed=5, N=128, L=32.0)
        field = generate_environment(spec)
        ana = analytic_moments(spec)
        emp = float((field.a[0] ** spec.p).mean())
        assert emp == pytest.approx(ana["E_entry_p"], rel=0.10)


class TestGeneration:
    def test_deterministic_in_seed(self):
        f1 = generate_environment(make_spec(seed=9))
        f2 = generate_environment(make_spec(seed=9))
        assert np.array_equal(f1.a, f2.a)
        assert np.array_equal(f1.theta, f2.theta)

    def test_seed_changes_field(self):
        f1 = generate_environment(make_spec(seed=9))
        f2 = generate_environment(make_spec(seed=10))
        assert not np.array_equal(f1.a, f2.a)

    def test_constant_when_no_tails(self):
        spec = EnvironmentSpec(d=2, L=4.0, N=16, R_dep=0.5)
        field = generate_environment(spec)
        assert np.all(field.a == 1.0)
        assert np.all(field.theta == 1.0)

    def test_theta_lambda_mode(self, small_field):
        assert np.array_equal(small_field.theta, small_field.Lam)

    def test_shared_coupling_ties_axes(self):
        field = generate_environment(make_spec(seed=2, axis_coupling="shared",
                                               q=2.0, r=1.0, theta_mode="unit"))
        assert np.array_equal(field.a[0], field.a[1])

    def test_independent_axes_differ(self, small_field):
        assert not np.array_equal(small_field.a[0], small_field.a[1])

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_envelope_order(self, seed):
        """lam <= every axis entry <= Lam, all strictly positive."""
        field = generate_environment(make_spec(seed=seed))
        assert np.all(field.lam > 0)
        for i in range(field.spec.d):
            assert np.all(field.lam <= field.a[i])
            assert np.all(field.a[i] <= field.Lam)

    @given(seed=st.integers(0, 10_000),
           tail=st.floats(7.0, 40.0))
    @settings(max_examples=25, deadline=None)
    def test_finite_and_heavy_tailed(self, seed, tail):
        field = generate_environment(make_spec(seed=seed, tail_hi=tail,
                                               tail_lo=tail))
        assert np.all(np.isfinite(field.a))
        assert field.Lam.max() > 1.0  # hi factor exceeds 1 somewhere
        assert field.lam.min() < 1.0


class TestDependenceRange:
    # h = 0.125 here so R_dep = 0.5 spans four cells and the block +
    # mollifier structure is actually resolved

    def test_decorrelation_beyond_range(self):
        field = generate_environment(make_spec(seed=7, N=64, L=8.0))
        c = pair_correlation(field, min_dist=field.spec.R_dep)
        # 20k pairs: null stddev ~ 1/sqrt(2e4) ~ 0.007
        assert abs(c) < 0.05

    def test_correlation_inside_range(self):
        field = generate_environment(make_spec(seed=7, N=64, L=8.0))
        x = field.Lam.ravel()
        y = np.roll(field.Lam, 1, axis=0).ravel()
        near = np.corrcoef(x, y)[0, 1]
        assert near > 0.2


def test_environment_stats_radius(small_field):
    rep = environment_stats(small_field)
    assert rep.N1_hat >= small_field.spec.R_dep
    assert rep.factor == 2.0
    assert set(rep.box_moments) <= {"Lam_p", "lam_inv_q", "theta_r", "theta_inv"}
