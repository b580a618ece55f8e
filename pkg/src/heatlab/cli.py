"""Command-line front end.

Exit codes: 0 = ran and passed, 1 = ran but a verification/positivity check
failed, 2 = usage, configuration or artifact-format error, 3 = resource
guard tripped.  Reports are JSON (sorted keys, no timestamps), curves CSV,
bulk fields raw f64; directory outputs carry a manifest.json with config
hash, seeds and wall clock.
"""

from __future__ import annotations

import json
import os
import sys
import time

import click
import numpy as np

from . import __version__, bounds, gridio, reproduce as repro, stochastics
from .env import EnvironmentSpec, environment_stats, generate_environment
from .errors import (ConfigurationError, FormatError, GeometryError,
                     HeatlabError, ModeError, PairingError, PositivityError,
                     ResourceGuardError, SequenceError, SolverError,
                     SpecValidationError)
from .green import scaling_limit_experiment
from .heat import heat_kernel_column, simulate_walkers, tv_to_column
from .metric import intrinsic_distance_map
from .operators import assemble_generator

_USAGE_ERRORS = (FormatError, SpecValidationError, ConfigurationError,
                 GeometryError, ModeError, PairingError, SequenceError)


class _Cli(click.Group):
    """Group whose entry point maps domain errors onto the exit-code contract."""

    def main(self, *args, **kwargs):
        kwargs["standalone_mode"] = False
        try:
            super().main(*args, **kwargs)
            code = 0
        except SystemExit as e:
            code = int(e.code or 0)
        except click.UsageError as e:
            click.echo(f"error: {e.format_message()}", err=True)
            if e.ctx is not None:
                click.echo(e.ctx.get_usage(), err=True)
            code = 2
        except click.exceptions.Abort:
            code = 2
        except click.ClickException as e:
            e.show()
            code = 2
        except _USAGE_ERRORS as e:
            click.echo(f"error: {e}", err=True)
            code = 2
        except ResourceGuardError as e:
            click.echo(f"resource guard: {e}", err=True)
            code = 3
        except (SolverError, PositivityError) as e:
            click.echo(f"numerical failure: {e}", err=True)
            code = 1
        except HeatlabError as e:
            click.echo(f"error: {e}", err=True)
            code = 2
        sys.exit(code)


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.split(","))


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(","))


def _vectors(text: str) -> list:
    return [_floats(part) for part in text.split(";")]


def _load_spec(path) -> EnvironmentSpec:
    data = gridio.read_json(path)
    try:
        return EnvironmentSpec.from_dict(data)
    except TypeError as e:
        raise FormatError(f"{path}: spec fields do not match ({e})") from e


def _emit(report: dict, out) -> None:
    if out is None:
        click.echo(json.dumps(gridio._jsonable(report), sort_keys=True,
                              indent=2))
    else:
        gridio.write_json(out, report)
        click.echo(f"wrote {out}")


def _finish(report: dict, out, passed_key: str = "passed") -> None:
    _emit(report, out)
    if not report.get(passed_key, True):
        raise SystemExit(1)


@click.group(cls=_Cli)
@click.version_option(__version__)
@click.option("--workers", type=int, default=None,
              help="Thread count for FFT/assembly (overrides HEATLAB_WORKERS).")
def main(workers):
    """Numerical laboratory for heat kernels in degenerate random media."""
    if workers is not None:
        os.environ["HEATLAB_WORKERS"] = str(workers)


# ---------------------------------------------------------------------------
# env

@main.group()
def env():
    """Generate and inspect random environments."""


@env.command("gen")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def env_gen(spec_path, out):
    """Sample the environment described by a spec JSON into a field directory."""
    t0 = time.monotonic()
    spec = _load_spec(spec_path)
    field = generate_environment(spec)
    gridio.save_environment(field, out)
    gridio.write_manifest(out, gridio.RunManifest.collect(
        command="env gen", config=spec.to_dict(), seeds=[spec.seed],
        inputs=[spec_path], outputs=[out], wall_clock_s=time.monotonic() - t0))
    click.echo(f"wrote {out}")


@env.command("stats")
@click.option("--env", "env_path", required=True, type=click.Path(exists=True))
@click.option("--centers", "centers_path", type=click.Path(exists=True))
@click.option("--out", type=click.Path())
def env_stats(env_path, centers_path, out):
    """Box moments, analytic counterparts, and the ergodic radius N1_hat."""
    field = gridio.load_environment(env_path)
    centers = None
    if centers_path is not None:
        centers = [tuple(c) for c in gridio.read_json(centers_path)]
    rep = environment_stats(field, centers=centers)
    _emit({
        "box_moments": rep.box_moments,
        "analytic": rep.analytic,
        "radii": rep.radii.tolist(),
        "curve_Lam_p": rep.curve_Lam_p.tolist(),
        "curve_lam_inv_q": rep.curve_lam_inv_q.tolist(),
        "N1_hat": rep.N1_hat,
        "factor": rep.factor,
        "notes": rep.notes,
    }, out)


# ---------------------------------------------------------------------------
# op

@main.group()
def op():
    """Discrete generator utilities."""


@op.command("export")
@click.option("--env", "env_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--edge-mean", default="harmonic", show_default=True,
              type=click.Choice(["harmonic", "arithmetic"]))
@click.option("--matrix", default="L", show_default=True,
              type=click.Choice(["L", "C"]))
def op_export(env_path, out, edge_mean, matrix):
    """Write the sparse generator in `row col value` text form."""
    field = gridio.load_environment(env_path)
    gen = assemble_generator(field, edge_mean=edge_mean)
    gridio.export_coo(gen.L if matrix == "L" else gen.C, out)
    click.echo(f"wrote {out}")


# ---------------------------------------------------------------------------
# heat

@main.group()
def heat():
    """Heat-kernel columns and walker simulations."""


@heat.command("kernel")
@click.option("--env", "env_path", required=True, type=click.Path(exists=True))
@click.option("--x0", required=True)
@click.option("--times", required=True)
@click.option("--tol", type=float, default=None,
              help="Step-halving agreement tolerance (default: positivity cap).")
@click.option("--out", required=True, type=click.Path())
def heat_kernel(env_path, x0, times, tol, out):
    """Compute p(t, x0, .) at the given times into a kernel directory."""
    t0 = time.monotonic()
    field = gridio.load_environment(env_path)
    gen = assemble_generator(field)
    col = heat_kernel_column(gen, _ints(x0), _floats(times), tol=tol)
    gridio.save_kernel(col, out)
    gridio.write_manifest(out, gridio.RunManifest.collect(
        command="heat kernel",
        config={"x0": list(_ints(x0)), "times": list(_floats(times)),
                "tol": tol, "spec": field.spec.to_dict()},
        seeds=[field.spec.seed], inputs=[env_path], outputs=[out],
        wall_clock_s=time.monotonic() - t0))
    click.echo(f"wrote {out}")


@heat.command("walkers")
@click.option("--env", "env_path", required=True, type=click.Path(exists=True))
@click.option("--x0", required=True)
@click.option("--t", "t_end", required=True, type=float)
@click.option("--paths", default=1000000, show_default=True, type=int)
@click.option("--seed", default=7, show_default=True, type=int)
@click.option("--kern", "kern_path", type=click.Path(exists=True),
              help="Kernel directory to compare against (TV distance check).")
@click.option("--out", type=click.Path())
def heat_walkers(env_path, x0, t_end, paths, seed, kern_path, out):
    """Simulate jump-chain walkers; optionally check TV distance to a kernel."""
    field = gridio.load_environment(env_path)
    gen = assemble_generator(field)
    res = simulate_walkers(gen, _ints(x0), t_end, paths, seed=seed)
    report = {"paths": paths, "t": t_end, "seed": seed, "backend": res.backend}
    if kern_path is not None:
        col = gridio.load_kernel(kern_path)
        tv = tv_to_column(res, col, gen)
        report.update(tv)
        report["passed"] = bool(tv["ratio"] <= 3.0)
    _finish(report, out)


# ---------------------------------------------------------------------------
# metric

@main.group()
def metric():
    """Intrinsic-metric distance maps."""


@metric.command("map")
@click.option("--env", "env_path", required=True, type=click.Path(exists=True))
@click.option("--x0", required=True)
@click.option("--nbhd", default=None, type=int,
              help="Stencil size (8/16 in 2d, 26 in 3d).")
@click.option("--out", required=True, type=click.Path())
def metric_map(env_path, x0, nbhd, out):
    """Shortest-path distance d_theta(x0, .) on the weighted stencil graph."""
    t0 = time.monotonic()
    field = gridio.load_environment(env_path)
    mf = intrinsic_distance_map(field, _ints(x0), neighborhood=nbhd)
    gridio.save_metric(mf, out)
    gridio.write_manifest(out, gridio.RunManifest.collect(
        command="metric map",
        config={"x0": list(_ints(x0)), "nbhd": mf.neighborhood,
                "spec": field.spec.to_dict()},
        seeds=[field.spec.seed], inputs=[env_path], outputs=[out],
        wall_clock_s=time.monotonic() - t0))
    click.echo(f"wrote {out}")


# ---------------------------------------------------------------------------
# verify

@main.group()
def verify():
    """Fit constants and check the kernel inequalities on computed artifacts."""


def _load_cases(env_paths, kern_paths, metric_paths=None):
    if len(env_paths) != len(kern_paths):
        raise PairingError("need one --kern per --env")
    if metric_paths is not None and len(metric_paths) != len(env_paths):
        raise PairingError("need one --metric per --env")
    gens, cols, mets = [], [], []
    for i, (e, k) in enumerate(zip(env_paths, kern_paths)):
        gens.append(assemble_generator(gridio.load_environment(e)))
        cols.append(gridio.load_kernel(k))
        if metric_paths is not None:
            mets.append(gridio.load_metric(metric_paths[i]))
    return gens, cols, mets


def _fit_report(bf: bounds.BoundFit) -> dict:
    return {
        "tag": bf.tag, "constants": bf.constants,
        "t_range": list(bf.t_range), "r_range": list(bf.r_range),
        "worst_log_ratio": bf.worst_log_ratio, "burn_in": bf.burn_in,
        "passed": bf.passed, "meta": bf.meta,
    }


@verify.command("upper")
@click.option("--env", "env_paths", multiple=True, required=True,
              type=click.Path(exists=True))
@click.option("--kern", "kern_paths", multiple=True, required=True,
              type=click.Path(exists=True))
@click.option("--metric", "metric_paths", multiple=True, required=True,
              type=click.Path(exists=True))
@click.option("--gamma", type=float, default=None)
@click.option("--out", type=click.Path())
def verify_upper(env_paths, kern_paths, metric_paths, gamma, out):
    """Intrinsic-form off-diagonal upper bound (fixed divisor 8)."""
    gens, cols, mets = _load_cases(env_paths, kern_paths, metric_paths)
    bf = bounds.verify_upper_intrinsic(cols, mets, gens, gamma=gamma)
    _finish(_fit_report(bf), out)


@verify.command("upper-euclid")
@click.option("--env", "env_paths", multiple=True, required=True,
              type=click.Path(exists=True))
@click.option("--kern", "kern_paths", multiple=True, required=True,
              type=click.Path(exists=True))
@click.option("--out", type=click.Path())
def verify_upper_euclid(env_paths, kern_paths, out):
    """Euclidean-form upper bound at theta = Lambda."""
    gens, cols, _ = _load_cases(env_paths, kern_paths)
    bf = bounds.verify_upper_euclidean(cols, gens)
    _finish(_fit_report(bf), out)


@verify.command("lower")
@click.option("--env", "env_paths", multiple=True, required=True,
              type=click.Path(exists=True))
@click.option("--kern", "kern_paths", multiple=True, required=True,
              type=click.Path(exists=True))
@click.option("--out", type=click.Path())
def verify_lower(env_paths, kern_paths, out):
    """Off-diagonal lower bound on the admissible cone."""
    gens, cols, _ = _load_cases(env_paths, kern_paths)
    bf = bounds.verify_lower(cols, gens)
    _finish(_fit_report(bf), out)


@verify.command("longrange")
@click.option("--env", "env_paths", multiple=True, required=True,
              type=click.Path(exists=True))
@click.option("--kern", "kern_paths", multiple=True, required=True,
              type=click.Path(exists=True))
@click.option("--scales", default="2,4,8", show_default=True)
@click.option("--targets", default="0.5,0;0,0.5", show_default=True,
              help="Semicolon-separated x vectors, |x| <= 2.")
@click.option("--out", type=click.Path())
def verify_longrange(env_paths, kern_paths, scales, targets, out):
    """Long-range bound with fixed exponent n^2|x|^2/2t and prefactor n^d."""
    gens, cols, _ = _load_cases(env_paths, kern_paths)
    bf = bounds.verify_long_range(cols, gens, _ints(scales), _vectors(targets))
    _finish(_fit_report(bf), out)


@verify.command("floor")
@click.option("--env", "env_path", required=True, type=click.Path(exists=True))
@click.option("--kern", "kern_path", required=True, type=click.Path(exists=True))
@click.option("--t", "t_val", required=True, type=float)
@click.option("--c11", type=float, default=None)
@click.option("--c12", type=float, default=1.0, show_default=True)
@click.option("--kappa", type=float, default=1.0, show_default=True)
@click.option("--out", type=click.Path())
def verify_floor(env_path, kern_path, t_val, c11, c12, kappa, out):
    """Near-diagonal kernel floor p >= t^{-d/2}/C_PH on B(x0, sqrt(t)/2)."""
    gen = assemble_generator(gridio.load_environment(env_path))
    col = gridio.load_kernel(kern_path)
    rep = bounds.near_diagonal_floor(col, gen, t_val, c11=c11, c12=c12,
                                     kappa=kappa)
    _finish(rep, out)


@verify.command("sobolev")
@click.option("--env", "env_path", required=True, type=click.Path(exists=True))
@click.option("--center", required=True)
@click.option("--radius", required=True, type=float)
@click.option("--trials", default=50, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", type=click.Path())
def verify_sobolev(env_path, center, radius, trials, seed, out):
    """Weighted Sobolev ratio over random smooth trial functions."""
    field = gridio.load_environment(env_path)
    gen = assemble_generator(field)
    rng = np.random.default_rng(seed)
    rep = bounds.sobolev_probe(gen, _ints(center), radius,
                               _fourier_trials(field.shape, trials, rng))
    _finish(rep, out)


@verify.command("maximal")
@click.option("--env", "env_path", required=True, type=click.Path(exists=True))
@click.option("--n", "n_ball", default=2.0, show_default=True, type=float)
@click.option("--delta", default=1.0, show_default=True, type=float)
@click.option("--sigma", default=1.0, show_default=True, type=float)
@click.option("--sigma-p", default=0.5, show_default=True, type=float)
@click.option("--eps", default=0.2, show_default=True, type=float)
@click.option("--psi-scale", default=0.3, show_default=True, type=float)
@click.option("--out", type=click.Path())
def verify_maximal(env_path, n_ball, delta, sigma, sigma_p, eps, psi_scale, out):
    """Caloric maximal inequality probe on one cylinder."""
    field = gridio.load_environment(env_path)
    gen = assemble_generator(field)
    rep = bounds.maximal_inequality_probe(
        gen, _default_psi(field, psi_scale), n=n_ball, delta=delta,
        sigma=sigma, sigma_p=sigma_p, eps=eps)
    _finish(rep, out)


def _fourier_trials(shape, n_trials, rng):
    axes = [np.linspace(0, 2 * np.pi, s, endpoint=False) for s in shape]
    grids = np.meshgrid(*axes, indexing="ij")
    out = []
    for _ in range(n_trials):
        u = np.zeros(shape)
        for _ in range(3):
            ks = rng.integers(1, 4, size=len(shape))
            ph = rng.uniform(0, 2 * np.pi, size=len(shape))
            term = np.ones(shape)
            for g, k, p in zip(grids, ks, ph):
                term = term * np.cos(k * g + p)
            u += rng.normal() * term
        out.append(u)
    return out


def _default_psi(field, scale):
    axes = [np.linspace(0, 2 * np.pi, s, endpoint=False) for s in field.shape]
    grids = np.meshgrid(*axes, indexing="ij")
    psi = np.ones(field.shape)
    for g in grids:
        psi = psi * np.sin(g)
    return scale * psi


# ---------------------------------------------------------------------------
# stoch

@main.group()
def stoch():
    """Concentration and chaining experiments."""


@stoch.command("chain")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--x", "x_text", required=True, help="Endpoint vector, e.g. 10,0")
@click.option("--r", "r_val", required=True, type=float)
@click.option("--sequences", default=100, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", type=click.Path())
def stoch_chain(spec_path, x_text, r_val, sequences, seed, out):
    """Chained ball-average sums along admissible sequences."""
    field = generate_environment(_load_spec(spec_path))
    chain = stochastics.chain_geometry(_floats(x_text), r_val)
    rep = stochastics.chained_average_ensemble(field, chain,
                                               n_sequences=sequences, seed=seed)
    rep["chain"] = {"k": chain.k, "s": chain.s, "D": chain.D}
    _emit(rep, out)


@stoch.command("rosenthal")
@click.option("--trials", default=500, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", type=click.Path())
def stoch_rosenthal(trials, seed, out):
    """Exhaustive sum-moment inequality check over random small ensembles."""
    rep = stochastics.random_rosenthal_ensemble(n_trials=trials, seed=seed)
    rep["passed"] = bool(rep["max_ratio"] < float("inf"))
    _finish(rep, out)


@stoch.command("moments")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--xi", default=1.5, show_default=True, type=float)
@click.option("--k-values", default="16,64,256,1024", show_default=True)
@click.option("-M", "--trials", default=2000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", type=click.Path())
@click.option("--csv", "csv_path", type=click.Path())
def stoch_moments(spec_path, xi, k_values, trials, seed, out, csv_path):
    """Ball-average moment scaling against K^xi with bootstrap CIs."""
    base = _load_spec(spec_path)
    rep = stochastics.moment_bound_experiment(base, xi=xi,
                                              K_values=_ints(k_values),
                                              M=trials, seed=seed)
    rep["passed"] = rep.pop("pass")
    if csv_path is not None:
        rows = [(K, m, r, lo, hi) for K, m, r, (lo, hi) in
                zip(rep["K_values"], rep["moments"], rep["ratios"],
                    rep["ratio_ci"])]
        gridio.write_curve(csv_path, ["K", "moment", "ratio", "ci_lo", "ci_hi"],
                           rows)
        click.echo(f"wrote {csv_path}")
    _finish(rep, out)


# ---------------------------------------------------------------------------
# green

@main.group()
def green():
    """Elliptic Green-function scaling study (d = 3)."""


@green.command("limit")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--x0", default=None)
@click.option("--r1", type=float, default=None)
@click.option("--r2", type=float, default=None)
@click.option("--n", "scales", default="4,8,16", show_default=True)
@click.option("--out", "csv_path", required=True, type=click.Path())
@click.option("--report", "report_path", type=click.Path())
def green_limit(spec_path, x0, r1, r2, scales, csv_path, report_path):
    """Rescaled Green function against the homogenized Gaussian potential."""
    spec = _load_spec(spec_path)
    rep = scaling_limit_experiment(
        spec, scales=_ints(scales), r1=r1, r2=r2,
        x0=None if x0 is None else _ints(x0))
    rows = [(d["n"], d["e_n"], d["rel_sup"], d["cells_sampled"])
            for d in rep["details"]]
    gridio.write_curve(csv_path, ["n", "e_n", "rel_sup", "cells"], rows)
    click.echo(f"wrote {csv_path}")
    if report_path is not None:
        gridio.write_json(report_path, rep)
        click.echo(f"wrote {report_path}")
    if not rep["decreasing"]:
        raise SystemExit(1)


# ---------------------------------------------------------------------------
# reproduce

@main.command("reproduce")
@click.argument("preset")
@click.option("--preset", "variant", default=None,
              help="Size variant for a family name (e.g. d2-small).")
@click.option("--out", type=click.Path(), default=None,
              help="Output directory (default: reproduce-<preset>/).")
@click.option("--max-seconds", type=float, default=None,
              help="Wall-clock resource guard; exceeding it exits 3.")
def reproduce_cmd(preset, variant, out, max_seconds):
    """Run a pinned acceptance suite: gaussian-sanity, upper-d2, lower-d2,
    longrange-d2, moments, green-d3 (or family + --preset variant)."""
    t0 = time.monotonic()
    report = repro.run_preset(preset, variant=variant, max_seconds=max_seconds)
    outdir = out if out is not None else f"reproduce-{preset}"
    gridio.write_json(os.path.join(outdir, "report.json"), report)
    gridio.write_manifest(outdir, gridio.RunManifest.collect(
        command=f"reproduce {preset}",
        config={"preset": preset, "variant": variant},
        seeds=[], inputs=[], outputs=[outdir],
        wall_clock_s=time.monotonic() - t0))
    click.echo(f"wrote {outdir}/report.json")
    click.echo(f"[{report['preset']}] {'PASS' if report['passed'] else 'FAIL'}")
    if not report["passed"]:
        raise SystemExit(1)


if __name__ == "__main__":
    main()
