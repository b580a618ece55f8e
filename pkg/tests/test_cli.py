"""Command-line round trips and the exit-code contract.

0 = pass, 1 = a verification ran and failed, 2 = usage/config/format,
3 = resource guard."""

import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from heatlab.cli import main
from heatlab.env import EnvironmentSpec
from heatlab.geometry import euclidean_distance_grid
from heatlab.gridio import load_kernel, save_kernel
from heatlab.heat import KernelColumn


@pytest.fixture
def runner():
    return CliRunner()


def all_text(res):
    return res.output + res.stderr


def write_spec(path, **kw):
    kw.setdefault("d", 2)
    kw.setdefault("L", 4.0)
    kw.setdefault("N", 16)
    kw.setdefault("R_dep", 0.5)
    spec = EnvironmentSpec(**kw)
    path.write_text(json.dumps(spec.to_dict()))
    return str(path)


def const_spec(path, **kw):
    # no tail indices -> the sampler returns the constant medium
    kw.setdefault("theta_mode", "lambda")
    return write_spec(path, **kw)


def test_help_and_version(runner):
    assert runner.invoke(main, ["--help"]).exit_code == 0
    res = runner.invoke(main, ["--version"])
    assert res.exit_code == 0


def test_env_pipeline(runner, tmp_path):
    spec = write_spec(tmp_path / "spec.json", tail_hi=8.0, tail_lo=8.0,
                      q=6.0, r=6.0, seed=3)
    envdir = tmp_path / "env"
    res = runner.invoke(main, ["env", "gen", "--spec", spec, "--out", str(envdir)])
    assert res.exit_code == 0, all_text(res)
    assert (envdir / "meta.json").exists()
    assert (envdir / "manifest.json").exists()
    res = runner.invoke(main, ["env", "stats", "--env", str(envdir)])
    assert res.exit_code == 0, all_text(res)
    rep = json.loads(res.output)
    assert "N1_hat" in rep and "box_moments" in rep


def test_op_export(runner, tmp_path):
    spec = const_spec(tmp_path / "spec.json", N=8, L=2.0)
    envdir = tmp_path / "env"
    res = runner.invoke(main, ["env", "gen", "--spec", spec, "--out", str(envdir)])
    assert res.exit_code == 0, all_text(res)
    out = tmp_path / "L.txt"
    res = runner.invoke(main, ["op", "export", "--env", str(envdir),
                               "--out", str(out), "--matrix", "C"])
    assert res.exit_code == 0, all_text(res)
    first = out.read_text().splitlines()[0].split()
    assert len(first) == 3 and float(first[2]) != 0


def test_kernel_metric_verify_cycle(runner, tmp_path):
    spec = const_spec(tmp_path / "spec.json")
    envdir, kerndir, metdir = (str(tmp_path / x) for x in ("env", "kern", "met"))
    runner.invoke(main, ["env", "gen", "--spec", spec, "--out", envdir])
    res = runner.invoke(main, ["heat", "kernel", "--env", envdir,
                               "--x0", "8,8", "--times", "0.25,0.5,1.0,2.0",
                               "--tol", "1e-8", "--out", kerndir])
    assert res.exit_code == 0, all_text(res)
    res = runner.invoke(main, ["metric", "map", "--env", envdir,
                               "--x0", "8,8", "--nbhd", "16", "--out", metdir])
    assert res.exit_code == 0, all_text(res)
    out = tmp_path / "fit.json"
    res = runner.invoke(main, ["verify", "upper", "--env", envdir,
                               "--kern", kerndir, "--metric", metdir,
                               "--out", str(out)])
    assert res.exit_code == 0, all_text(res)
    rep = json.loads(out.read_text())
    assert rep["passed"] and rep["constants"]["c1"] > 0
    res = runner.invoke(main, ["verify", "upper-euclid", "--env", envdir,
                               "--kern", kerndir])
    assert res.exit_code == 0, all_text(res)
    res = runner.invoke(main, ["verify", "floor", "--env", envdir,
                               "--kern", kerndir, "--t", "1.0"])
    assert res.exit_code == 0, all_text(res)


def test_walkers_against_kernel(runner, tmp_path):
    spec = const_spec(tmp_path / "spec.json", N=8, L=2.0)
    envdir, kerndir = str(tmp_path / "env"), str(tmp_path / "kern")
    runner.invoke(main, ["env", "gen", "--spec", spec, "--out", envdir])
    runner.invoke(main, ["heat", "kernel", "--env", envdir, "--x0", "4,4",
                         "--times", "0.2", "--tol", "1e-9", "--out", kerndir])
    res = runner.invoke(main, ["heat", "walkers", "--env", envdir,
                               "--x0", "4,4", "--t", "0.2",
                               "--paths", "20000", "--kern", kerndir])
    assert res.exit_code == 0, all_text(res)
    rep = json.loads(res.output)
    assert rep["passed"] and rep["ratio"] <= 3.0


def test_verification_failure_exits_one(runner, tmp_path):
    spec = const_spec(tmp_path / "spec.json")
    envdir, kerndir = str(tmp_path / "env"), str(tmp_path / "kern")
    runner.invoke(main, ["env", "gen", "--spec", spec, "--out", envdir])
    # bake a kernel whose values grow with distance: upper fit must fail
    shape, h = (16, 16), 0.25
    r = euclidean_distance_grid(shape, (8, 8), h).ravel()
    times = np.array([0.25, 0.5])
    data = np.stack([np.exp(r**2 / (2 * t)) / (4 * math.pi * t) for t in times])
    save_kernel(KernelColumn(source=(8, 8), times=times, data=data,
                             shape=shape), kerndir)
    res = runner.invoke(main, ["verify", "upper-euclid", "--env", envdir,
                               "--kern", kerndir])
    assert res.exit_code == 1, all_text(res)
    rep = json.loads(res.output)
    assert not rep["passed"]


class TestUsageErrors:
    def test_missing_option(self, runner):
        assert runner.invoke(main, ["env", "gen"]).exit_code == 2

    def test_corrupt_artifact(self, runner, tmp_path):
        bad = tmp_path / "env"
        bad.mkdir()
        (bad / "meta.json").write_text("{oops\n")
        res = runner.invoke(main, ["env", "stats", "--env", str(bad)])
        assert res.exit_code == 2
        assert "invalid JSON at line" in res.stderr

    def test_invalid_spec(self, runner, tmp_path):
        spec = write_spec(tmp_path / "spec.json", d=4)
        res = runner.invoke(main, ["env", "gen", "--spec", spec,
                                   "--out", str(tmp_path / "env")])
        assert res.exit_code == 2

    def test_pairing_mismatch(self, runner, tmp_path):
        spec = const_spec(tmp_path / "spec.json", N=8, L=2.0)
        envdir, kerndir = str(tmp_path / "env"), str(tmp_path / "kern")
        runner.invoke(main, ["env", "gen", "--spec", spec, "--out", envdir])
        runner.invoke(main, ["heat", "kernel", "--env", envdir, "--x0", "4,4",
                             "--times", "0.2", "--out", kerndir])
        res = runner.invoke(main, ["verify", "upper-euclid", "--env", envdir,
                                   "--env", envdir, "--kern", kerndir])
        assert res.exit_code == 2
        assert "one --kern per --env" in res.stderr

    def test_mode_error(self, runner, tmp_path):
        spec = const_spec(tmp_path / "spec.json", N=8, L=2.0,
                          theta_mode="unit")
        envdir, kerndir = str(tmp_path / "env"), str(tmp_path / "kern")
        runner.invoke(main, ["env", "gen", "--spec", spec, "--out", envdir])
        runner.invoke(main, ["heat", "kernel", "--env", envdir, "--x0", "4,4",
                             "--times", "0.2", "--out", kerndir])
        res = runner.invoke(main, ["verify", "lower", "--env", envdir,
                                   "--kern", kerndir])
        assert res.exit_code == 2

    def test_unknown_preset(self, runner):
        res = runner.invoke(main, ["reproduce", "mystery"])
        assert res.exit_code == 2
        assert "unknown preset" in res.stderr

    def test_family_needs_variant(self, runner):
        res = runner.invoke(main, ["reproduce", "upper"])
        assert res.exit_code == 2
        assert "needs --preset" in res.stderr


def test_resource_guard_exits_three(runner, tmp_path):
    res = runner.invoke(main, ["reproduce", "upper", "--preset", "d2-small",
                               "--out", str(tmp_path / "rep"),
                               "--max-seconds", "0.001"])
    assert res.exit_code == 3
    assert "resource guard" in res.stderr


def test_moments_deterministic(runner, tmp_path):
    spec = write_spec(tmp_path / "spec.json", N=32, L=8.0,
                      axis_coupling="shared", tail_hi=8.0, tail_lo=8.0)
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        res = runner.invoke(main, ["stoch", "moments", "--spec", spec,
                                   "--k-values", "4,16", "-M", "10",
                                   "--out", str(out),
                                   "--csv", str(tmp_path / (name + ".csv"))])
        assert res.exit_code in (0, 1), all_text(res)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    header = (tmp_path / "a.json.csv").read_text().splitlines()[0]
    assert header == "K,moment,ratio,ci_lo,ci_hi"


def test_green_limit_curve(runner, tmp_path):
    spec = const_spec(tmp_path / "spec.json", d=3, N=24, L=6.0)
    csv = tmp_path / "curve.csv"
    res = runner.invoke(main, ["green", "limit", "--spec", spec,
                               "--n", "3,6", "--r1", "0.25", "--r2", "0.375",
                               "--out", str(csv)])
    assert res.exit_code == 0, all_text(res)
    lines = csv.read_text().strip().splitlines()
    assert lines[0] == "n,e_n,rel_sup,cells"
    assert len(lines) == 3
    e3, e6 = (float(l.split(",")[1]) for l in lines[1:])
    assert e6 < e3
    res = runner.invoke(main, ["green", "limit", "--spec", spec,
                               "--n", "1,2", "--r1", "0.25", "--r2", "0.375",
                               "--out", str(csv)])
    assert res.exit_code == 2      # under-resolved annulus


def test_stoch_chain_smoke(runner, tmp_path):
    spec = write_spec(tmp_path / "spec.json", tail_hi=8.0, tail_lo=8.0,
                      q=6.0, r=6.0)
    res = runner.invoke(main, ["stoch", "chain", "--spec", spec,
                               "--x", "1.5,0", "--r", "1.0",
                               "--sequences", "5"])
    assert res.exit_code == 0, all_text(res)
    rep = json.loads(res.output)
    assert rep["chain"]["k"] == 18
    assert rep["max_sum_over_k"] >= 1.0
