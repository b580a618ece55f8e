"""Seed plumbing, worker configuration and small shared helpers."""

from __future__ import annotations

import os

import numpy as np

# Stable stream ids so that field components draw from disjoint substreams
# of one master seed.  Order matters for reproducibility; never reorder.
STREAM_AXIS_HI = 0       # upper-tail factor, per axis: 0..d-1 offsets
STREAM_AXIS_LO = 16      # lower-tail factor, per axis
STREAM_THETA = 32
STREAM_BLOB_POINTS = 40
STREAM_BLOB_AMPS = 41
STREAM_WALKERS = 48
STREAM_TRIALS = 56
STREAM_BOOT = 57
STREAM_SEQ = 58


def substream(seed: int, *key: int) -> np.random.Generator:
    """Deterministic child generator for (seed, key...)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def child_seed(seed: int, *key: int) -> int:
    """Stable derived integer seed for (seed, key...)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def get_workers(explicit: int | None = None) -> int:
    """Worker count: explicit argument beats HEATLAB_WORKERS beats 1."""
    if explicit is not None and explicit > 0:
        return int(explicit)
    env = os.environ.get("HEATLAB_WORKERS", "")
    try:
        n = int(env)
    except ValueError:
        n = 0
    return n if n > 0 else 1


def burn_in_scale(scales, values, rel_tol: float = 0.05):
    """Smallest scale from which doubling moves the value by < rel_tol.

    `scales` must be increasing and (approximately) dyadic; `values` are the
    monitored quantities (worst-case log ratios, ball averages, ...).  The
    change is measured relative to max(1, |value|) so that near-zero values do
    not inflate the criterion.  Returns None when nothing stabilizes.
    """
    scales = list(scales)
    values = list(values)
    for i in range(len(scales) - 1):
        ok = True
        for j in range(i, len(scales) - 1):
            num = abs(values[j + 1] - values[j])
            den = max(1.0, abs(values[j]))
            if num / den >= rel_tol:
                ok = False
                break
        if ok:
            return scales[i]
    return None


def trend_slope(x, y) -> float:
    """Least-squares slope of y against x (plain 1d regression)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        return 0.0
    xm = x - x.mean()
    denom = (xm**2).sum()
    if denom == 0:
        return 0.0
    return float((xm * (y - y.mean())).sum() / denom)
