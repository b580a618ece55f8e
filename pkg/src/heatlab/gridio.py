"""On-disk artifact formats.

A field/kernel/metric artifact is a directory holding one meta.json plus raw
little-endian float64 arrays in row-major cell order (a0.f64 ... theta.f64,
p_t{k}.f64, d.f64).  Reports are JSON with sorted keys so identical runs are
byte-identical; curves are plain CSV; run provenance goes into manifest.json
(the only file allowed to contain wall-clock times).
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .env import EnvironmentField, EnvironmentSpec
from .errors import FormatError
from .heat import KernelColumn
from .metric import MetricField

FORMAT_VERSION = 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj)!r} into a report")


def write_json(path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2)
    path.write_text(text + "\n")


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise FormatError(
            f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}"
        ) from e
    except OSError as e:
        raise FormatError(f"{path}: {e.strerror}") from e


def write_curve(path, header, rows) -> None:
    """CSV with one header row; floats written with repr precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([x.item() if isinstance(x, np.generic) else x for x in row])


def _write_f64(path, arr: np.ndarray) -> None:
    np.ascontiguousarray(arr, dtype="<f8").tofile(path)


def _read_f64(path, shape) -> np.ndarray:
    arr = np.fromfile(path, dtype="<f8")
    n = int(np.prod(shape))
    if arr.size != n:
        raise FormatError(f"{path}: expected {n} float64 values, found {arr.size}")
    return arr.reshape(shape)


def _load_meta(dirpath, kind: str) -> dict:
    dirpath = Path(dirpath)
    meta = read_json(dirpath / "meta.json")
    if meta.get("kind") != kind:
        raise FormatError(
            f"{dirpath}: expected a {kind} directory, found kind={meta.get('kind')!r}")
    if meta.get("format_version") != FORMAT_VERSION:
        raise FormatError(
            f"{dirpath}: unsupported format_version {meta.get('format_version')!r}")
    return meta


# ---------------------------------------------------------------------------
# Environments

def save_environment(field: EnvironmentField, out) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(field.d):
        _write_f64(out / f"a{i}.f64", field.a[i])
    _write_f64(out / "theta.f64", field.theta)
    write_json(out / "meta.json", {
        "format_version": FORMAT_VERSION,
        "kind": "environment",
        "spec": field.spec.to_dict(),
    })
    return out


def load_environment(path) -> EnvironmentField:
    path = Path(path)
    meta = _load_meta(path, "environment")
    try:
        spec = EnvironmentSpec.from_dict(meta["spec"])
    except (KeyError, TypeError) as e:
        raise FormatError(f"{path}/meta.json: bad spec block ({e})") from e
    a = np.stack([_read_f64(path / f"a{i}.f64", spec.shape)
                  for i in range(spec.d)])
    theta = _read_f64(path / "theta.f64", spec.shape)
    if (a <= 0).any() or (theta <= 0).any():
        raise FormatError(f"{path}: nonpositive field values on disk")
    lam = np.minimum.reduce(list(a))
    Lam = np.maximum.reduce(list(a))
    return EnvironmentField(spec=spec, a=a, theta=theta, lam=lam, Lam=Lam)


# ---------------------------------------------------------------------------
# Kernel columns

def save_kernel(col: KernelColumn, out) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(len(col.times)):
        _write_f64(out / f"p_t{k}.f64", col.data[k])
    write_json(out / "meta.json", {
        "format_version": FORMAT_VERSION,
        "kind": "kernel",
        "source": list(col.source),
        "times": list(col.times),
        "shape": list(col.shape),
        "extra": col.meta,
    })
    return out


def load_kernel(path) -> KernelColumn:
    path = Path(path)
    meta = _load_meta(path, "kernel")
    shape = tuple(meta["shape"])
    n = int(np.prod(shape))
    times = np.asarray(meta["times"], dtype=float)
    data = np.stack([_read_f64(path / f"p_t{k}.f64", (n,))
                     for k in range(times.size)])
    return KernelColumn(source=tuple(meta["source"]), times=times,
                        data=data, shape=shape, meta=meta.get("extra", {}))


# ---------------------------------------------------------------------------
# Metric maps

def save_metric(mf: MetricField, out) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    _write_f64(out / "d.f64", mf.dist)
    write_json(out / "meta.json", {
        "format_version": FORMAT_VERSION,
        "kind": "metric",
        "source": list(mf.source),
        "shape": list(mf.shape),
        "neighborhood": mf.neighborhood,
        "h": mf.h,
        "theta_mode": mf.theta_mode,
        "extra": mf.meta,
    })
    return out


def load_metric(path) -> MetricField:
    path = Path(path)
    meta = _load_meta(path, "metric")
    dist = _read_f64(path / "d.f64", tuple(meta["shape"]))
    return MetricField(source=tuple(meta["source"]), dist=dist,
                       neighborhood=int(meta["neighborhood"]),
                       h=float(meta["h"]), theta_mode=meta["theta_mode"],
                       meta=meta.get("extra", {}))


# ---------------------------------------------------------------------------
# Sparse export

def export_coo(matrix, out) -> Path:
    """Plain text: one `row col value` line per stored entry."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    coo = matrix.tocoo()
    with open(out, "w") as fh:
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {float(v)!r}\n")
    return out


# ---------------------------------------------------------------------------
# Run manifests

def config_hash(payload) -> str:
    text = json.dumps(_jsonable(payload), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seeds: list
    inputs: list
    outputs: list
    wall_clock_s: float
    versions: dict

    @classmethod
    def collect(cls, command: str, config, seeds, inputs, outputs,
                wall_clock_s: float) -> "RunManifest":
        from . import __version__
        import scipy
        return cls(
            command=command,
            config_hash=config_hash(config),
            seeds=[int(s) for s in seeds],
            inputs=[str(p) for p in inputs],
            outputs=[str(p) for p in outputs],
            wall_clock_s=float(wall_clock_s),
            versions={
                "heatlab": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
        )


def write_manifest(outdir, manifest: RunManifest) -> Path:
    path = Path(outdir) / "manifest.json"
    write_json(path, asdict(manifest))
    return path
