"""Walker backend parity: the compiled kernel and the numpy fallback draw
from the same counter-based per-path stream, so fixed seeds must give
bit-identical ensembles."""

import numpy as np
import pytest
import scipy.sparse as sp

from heatlab._accel import available_backends, backend_name
from heatlab.env import generate_environment
from heatlab.heat import heat_kernel_column, simulate_walkers, tv_to_column
from heatlab.operators import assemble_generator

from conftest import make_constant_field, make_spec


def _csr_args(gen, x0, t, n_paths, seed):
    Loff = (gen.L - sp.diags(gen.L.diagonal())).tocsr()
    Loff.eliminate_zeros()
    rate = np.asarray(Loff.sum(axis=1)).ravel()
    return (Loff.indptr.astype(np.int64), Loff.indices.astype(np.int64),
            np.ascontiguousarray(Loff.data), rate,
            gen.flat_index(x0), float(t), n_paths, seed)


def test_backend_name_known():
    assert backend_name() in ("cython", "numpy")


def test_backends_agree_exactly():
    impls = available_backends()
    if "cython" not in impls:
        pytest.skip("compiled walker kernel not built")
    gen = assemble_generator(generate_environment(make_spec(seed=9, N=8)))
    args = _csr_args(gen, (2, 5), 0.3, 4000, seed=17)
    a = impls["cython"].simulate_counts(*args)
    b = impls["numpy"].simulate_counts(*args)
    assert np.array_equal(a, b)
    assert a.sum() == 4000


def test_counts_partition_paths(small_field):
    gen = assemble_generator(small_field)
    res = simulate_walkers(gen, (3, 3), 0.5, 2500, seed=4)
    assert res.counts.sum() == res.n_paths == 2500
    assert (res.counts >= 0).all()
    assert res.source == (3, 3)


def test_zero_time_stays_home():
    gen = assemble_generator(make_constant_field(N=8, L=2.0))
    res = simulate_walkers(gen, (1, 6), 0.0, 300, seed=0)
    assert res.counts[gen.flat_index((1, 6))] == 300


def test_seed_pins_ensemble(small_field):
    gen = assemble_generator(small_field)
    a = simulate_walkers(gen, (0, 0), 0.4, 1000, seed=11)
    b = simulate_walkers(gen, (0, 0), 0.4, 1000, seed=11)
    c = simulate_walkers(gen, (0, 0), 0.4, 1000, seed=12)
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)


def test_rejects_empty_ensemble(small_field):
    gen = assemble_generator(small_field)
    with pytest.raises(ValueError):
        simulate_walkers(gen, (0, 0), 0.1, 0)


def test_unit_medium_diffusivity():
    # on a = I the walk has per-axis variance exactly 2t at any lattice step
    field = make_constant_field(N=32, L=8.0)
    gen = assemble_generator(field)
    res = simulate_walkers(gen, (16, 16), 0.25, 40000, seed=2)
    cells = np.array(np.unravel_index(np.arange(res.counts.size), gen.shape))
    delta = (cells - 16) * field.h
    delta -= 8.0 * np.round(delta / 8.0)
    w = res.counts / res.n_paths
    mean = delta @ w
    var = (delta**2) @ w - mean**2
    assert np.abs(mean).max() < 0.02
    assert var[0] == pytest.approx(0.5, rel=0.05)
    assert var[1] == pytest.approx(0.5, rel=0.05)


def test_tv_against_kernel_small():
    gen = assemble_generator(make_constant_field(N=8, L=2.0))
    t = 0.2
    col = heat_kernel_column(gen, (4, 4), (t,), tol=1e-9)
    res = simulate_walkers(gen, (4, 4), t, 20000, seed=1)
    rep = tv_to_column(res, col, gen)
    assert rep["tv"] < 0.05
    assert rep["ratio"] <= 3.0
