"""Monte Carlo estimation of bounded reachability, used to cross-check the solvers."""
from __future__ import annotations

import math

import numpy as np

from ..dtmc import SparseDtmc

Z95 = 1.959963984540054


def mc_estimate(dtmc: SparseDtmc, target: np.ndarray, paths: int, horizon: int, seed: int = 0) -> tuple[float, float]:
    """Fraction of ``paths`` runs from the initial state that hit ``target`` within ``horizon`` steps.

    Returns ``(estimate, half_width)`` of a 95% normal-approximation interval.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if paths < 1:
        raise ValueError("need at least one path")
    rng = np.random.default_rng(seed)
    P = dtmc.matrix
    # row i's cumulative probabilities shifted into (i, i+1], one sorted array for all rows
    row_of = np.repeat(np.arange(dtmc.n), np.diff(P.indptr))
    local = np.cumsum(P.data) - np.repeat(np.concatenate(([0.0], np.cumsum(P.data)))[P.indptr[:-1]],
                                           np.diff(P.indptr))
    keys = row_of + np.minimum(local, 1.0)
    # guard against row sums a hair below 1
    last = P.indptr[1:] - 1
    keys[last[np.diff(P.indptr) > 0]] = row_of[last[np.diff(P.indptr) > 0]] + 1.0

    state = np.full(paths, dtmc.initial, dtype=np.int64)
    hit = target[state].copy()
    for _ in range(horizon):
        live = np.flatnonzero(~hit)
        if live.size == 0:
            break
        u = rng.random(live.size)
        pos = np.searchsorted(keys, state[live] + u, side="right")
        state[live] = P.indices[pos]
        hit[live] = target[state[live]]
    estimate = float(hit.mean())
    half_width = Z95 * math.sqrt(estimate * (1.0 - estimate) / paths)
    return estimate, half_width
