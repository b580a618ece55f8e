"""Intrinsic metric: graph shortest paths vs closed forms and a slow oracle.

The Bellman-Ford relaxation below is an independent route to the same
distances: no priority queue, no scipy graph machinery, just edge
relaxations until a fixed point.  Agreement pins down the dijkstra usage.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatlab.env import EnvironmentSpec, EnvironmentField, generate_environment
from heatlab.errors import ModeError, PairingError
from heatlab.geometry import neighborhood_offsets, stencil_slack
from heatlab.metric import (euclidean_comparison, intrinsic_distance_map,
                            metric_graph, sandwich_check, strict_locality_probe,
                            triangle_violations)

from conftest import make_constant_field, make_spec


def bellman_ford_distances(G, i0: int) -> np.ndarray:
    """Plain edge-relaxation shortest paths (undirected view of csr G)."""
    coo = G.tocoo()
    u = np.concatenate([coo.row, coo.col])
    v = np.concatenate([coo.col, coo.row])
    w = np.concatenate([coo.data, coo.data])
    dist = np.full(G.shape[0], np.inf)
    dist[i0] = 0.0
    for _ in range(G.shape[0]):
        cand = dist[u] + w
        nxt = dist.copy()
        np.minimum.at(nxt, v, cand)
        if np.array_equal(nxt, dist):
            break
        dist = nxt
    return dist


def scaled_constant_field(a_by_axis, theta=1.0, N=12, L=3.0):
    d = len(a_by_axis)
    spec = EnvironmentSpec(d=d, L=L, N=N, R_dep=2 * L / N)
    shape = spec.shape
    a = np.stack([np.full(shape, float(c)) for c in a_by_axis])
    return EnvironmentField(spec=spec, a=a, theta=np.full(shape, float(theta)),
                            lam=a.min(axis=0), Lam=a.max(axis=0))


class TestAgainstBellmanFord:
    def test_random_environment(self):
        field = generate_environment(make_spec(seed=23, N=10))
        G = metric_graph(field, neighborhood=8)
        mf = intrinsic_distance_map(field, (2, 3), neighborhood=8)
        oracle = bellman_ford_distances(G, 2 * 10 + 3)
        assert np.allclose(mf.dist.ravel(), oracle, rtol=1e-12, atol=1e-12)

    def test_sixteen_neighborhood(self):
        field = generate_environment(make_spec(seed=24, N=10))
        G = metric_graph(field, neighborhood=16)
        mf = intrinsic_distance_map(field, (0, 0), neighborhood=16)
        oracle = bellman_ford_distances(G, 0)
        assert np.allclose(mf.dist.ravel(), oracle, rtol=1e-12, atol=1e-12)


class TestClosedForms:
    def test_axis_pairs_exact_constant_tensor(self):
        field = make_constant_field(N=12, L=3.0)
        mf = intrinsic_distance_map(field, (0, 0))
        h = field.h
        for k in range(1, 6):
            assert mf.dist[k, 0] == pytest.approx(k * h, rel=1e-12)
            assert mf.dist[0, k] == pytest.approx(k * h, rel=1e-12)

    def test_periodic_wraparound(self):
        field = make_constant_field(N=12, L=3.0)
        mf = intrinsic_distance_map(field, (0, 0))
        # 11 steps forward = 1 step backward on the torus
        assert mf.dist[11, 0] == pytest.approx(field.h, rel=1e-12)

    def test_tensor_scale(self):
        # a = 4 I: line element sqrt(theta/a) = 1/2, so all distances halve
        base = intrinsic_distance_map(scaled_constant_field((1.0, 1.0)), (0, 0))
        fast = intrinsic_distance_map(scaled_constant_field((4.0, 4.0)), (0, 0))
        assert np.allclose(fast.dist, base.dist / 2.0, rtol=1e-12)

    def test_anisotropic_axes(self):
        field = scaled_constant_field((4.0, 1.0))
        mf = intrinsic_distance_map(field, (0, 0))
        h = field.h
        assert mf.dist[3, 0] == pytest.approx(3 * h / 2.0, rel=1e-12)
        assert mf.dist[0, 3] == pytest.approx(3 * h, rel=1e-12)

    def test_speed_measure_scale(self):
        # theta = 9: distances triple relative to theta = 1
        base = intrinsic_distance_map(scaled_constant_field((1.0, 1.0)), (0, 0))
        slow = intrinsic_distance_map(scaled_constant_field((1.0, 1.0), theta=9.0),
                                      (0, 0))
        assert np.allclose(slow.dist, 3.0 * base.dist, rtol=1e-12)


class TestStencilQuality:
    def test_sixteen_move_overshoot_bound(self):
        # the graph metric never undershoots Euclid (every edge is at least
        # its Euclidean length) and overshoots by at most the worst polyline
        # detour sec(13.28 deg) ~ 1.0275 on a constant medium
        field = make_constant_field(N=32, L=8.0, theta_mode="lambda")
        mf = intrinsic_distance_map(field, (0, 0), neighborhood=16)
        rep = euclidean_comparison(mf, field, n_pairs=500)
        assert rep["max_ratio"] <= 1.0 + stencil_slack(2, 16) + 1e-9
        assert rep["min_ratio"] >= 1.0 - 1e-9

    def test_eight_vs_sixteen_monotone(self):
        field = generate_environment(make_spec(seed=25, N=12))
        d8 = intrinsic_distance_map(field, (0, 0), neighborhood=8)
        d16 = intrinsic_distance_map(field, (0, 0), neighborhood=16)
        # a richer stencil can only shorten graph paths
        assert np.all(d16.dist <= d8.dist + 1e-12)

    def test_offsets_counts(self):
        assert len(neighborhood_offsets(2, 8)) == 8
        assert len(neighborhood_offsets(2, 16)) == 16
        assert len(neighborhood_offsets(3, 26)) == 26

    def test_comparison_requires_lambda_mode(self):
        field = make_constant_field(N=12, theta_mode="unit")
        mf = intrinsic_distance_map(field, (0, 0))
        with pytest.raises(ModeError):
            euclidean_comparison(mf, field)


class TestAxioms:
    def test_zero_at_source_positive_elsewhere(self, small_field):
        mf = intrinsic_distance_map(small_field, (5, 5))
        assert mf.dist[5, 5] == 0.0
        off = mf.dist.copy()
        off[5, 5] = np.inf
        assert off.min() > 0.0

    def test_symmetry(self, small_field):
        ma = intrinsic_distance_map(small_field, (1, 2))
        mb = intrinsic_distance_map(small_field, (9, 14))
        assert ma.dist[9, 14] == pytest.approx(mb.dist[1, 2], rel=1e-12)

    def test_triangle_inequality(self, small_field):
        m0 = intrinsic_distance_map(small_field, (0, 0))
        zs = [(4, 4), (8, 2), (12, 12)]
        maps_z = [intrinsic_distance_map(small_field, z) for z in zs]
        rng = np.random.default_rng(0)
        targets = rng.integers(0, 16, size=(200, 2))
        assert triangle_violations(m0, maps_z, targets) == 0

    def test_sandwich(self, small_field):
        mf = intrinsic_distance_map(small_field, (3, 3))
        rep = sandwich_check(mf, small_field, n_pairs=500)
        assert rep["violations_lower"] == 0
        assert rep["violations_upper"] == 0

    @given(seed=st.integers(0, 300))
    @settings(max_examples=8, deadline=None)
    def test_symmetry_random(self, seed):
        field = generate_environment(make_spec(seed=seed, N=10))
        rng = np.random.default_rng(seed)
        x = tuple(rng.integers(0, 10, size=2))
        y = tuple(rng.integers(0, 10, size=2))
        mx = intrinsic_distance_map(field, x)
        my = intrinsic_distance_map(field, y)
        assert mx.dist[y] == pytest.approx(my.dist[x], rel=1e-12)


def smooth_medium(N, L=4.0):
    """Deterministic smooth coefficients: resolution-consistent by construction."""
    spec = EnvironmentSpec(d=2, L=L, N=N, R_dep=1.0)
    idx = (np.arange(N) + 0.5) * (L / N)
    X, Y = np.meshgrid(idx, idx, indexing="ij")
    a0 = 1.0 + 0.5 * np.sin(2 * np.pi * X / L) * np.cos(2 * np.pi * Y / L)
    a1 = 1.0 + 0.3 * np.cos(2 * np.pi * X / L)
    a = np.stack([a0, a1])
    return EnvironmentField(spec=spec, a=a, theta=np.ones((N, N)),
                            lam=a.min(axis=0), Lam=a.max(axis=0))


class TestStrictLocality:
    def test_smooth_medium_self_converges(self):
        # one continuum medium sampled at N, 2N, 4N: level differences
        # shrink at first order in h
        levels = [intrinsic_distance_map(smooth_medium(n), (0, 0))
                  for n in (16, 32, 64)]
        rep = strict_locality_probe(levels)
        assert rep["decreasing"]
        assert rep["ratios"][0] > 1.5  # ~2 expected for a first-order scheme

    def test_small_balls_shrink(self):
        levels = [intrinsic_distance_map(smooth_medium(n), (0, 0))
                  for n in (16, 32, 64)]
        rep = strict_locality_probe(levels)
        for row in rep["small_ball_sup"]:
            assert all(b < a for a, b in zip(row, row[1:]))

    def test_fresh_noise_flagged_nonconvergent(self):
        # a different realization per level is not one medium; the probe
        # must not report convergence
        fields = [generate_environment(make_spec(seed=100 + k, N=n, L=4.0))
                  for k, n in enumerate((16, 32, 64))]
        rep = strict_locality_probe(
            [intrinsic_distance_map(f, (0, 0)) for f in fields])
        assert not rep["decreasing"]

    def test_needs_doubling(self):
        levels = [intrinsic_distance_map(make_constant_field(N=n, L=4.0), (0, 0))
                  for n in (16, 32, 48)]
        with pytest.raises(PairingError):
            strict_locality_probe(levels)


class TestMonotonicity:
    # larger a shortens paths, heavier theta lengthens them

    def test_raise_conductance_never_lengthens(self, small_field):
        base = intrinsic_distance_map(small_field, (0, 0))
        rng = np.random.default_rng(1)
        a = small_field.a * (1.0 + rng.random(small_field.a.shape))
        boosted = EnvironmentField(spec=small_field.spec, a=a,
                                   theta=small_field.theta,
                                   lam=a.min(axis=0), Lam=a.max(axis=0))
        after = intrinsic_distance_map(boosted, (0, 0))
        assert np.all(after.dist <= base.dist + 1e-12)

    def test_raise_theta_never_shortens(self, small_field):
        base = intrinsic_distance_map(small_field, (0, 0))
        rng = np.random.default_rng(2)
        heavier = EnvironmentField(
            spec=small_field.spec, a=small_field.a,
            theta=small_field.theta * (1.0 + rng.random(small_field.shape)),
            lam=small_field.lam, Lam=small_field.Lam)
        after = intrinsic_distance_map(heavier, (0, 0))
        assert np.all(after.dist >= base.dist - 1e-12)
