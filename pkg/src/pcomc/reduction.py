"""Firing-state reduction of the population DTMC and the matching reward transform.

Non-firing states (k_T = 0) have a single deterministic successor, so every
run through them can be collapsed onto the next firing state.  The reduced
chain keeps the initial state and the firing states only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .dtmc import INIT, ModelError, RewardStructure, SparseDtmc, make_dtmc
from .params import ModelParams
from .population import GlobalState, _compositions, is_firing, population_labels


def delta_max(state: Sequence[int]) -> int:
    """Highest occupied phase of ``state``."""
    for phase in range(len(state), 0, -1):
        if state[phase - 1] > 0:
            return phase
    raise ValueError("state has no oscillators")


def deterministic_successor(state: Sequence[int]) -> GlobalState:
    """The firing state reached from ``state`` by deterministic steps (itself if firing)."""
    shift = len(state) - delta_max(state)
    return (0,) * shift + tuple(state[:len(state) - shift])


def chain_length(state: Sequence[int]) -> int:
    """Number of deterministic steps from ``state`` to its deterministic successor."""
    return len(state) - delta_max(state)


def predecessors(firing: Sequence[int], params: ModelParams | None = None) -> set[GlobalState]:
    """All non-firing states whose deterministic successor is ``firing``.

    These are the right-shifts of ``firing`` that keep every oscillator at a
    phase of at least 1.
    """
    firing = tuple(firing)
    if not is_firing(firing):
        raise ValueError(f"{firing} is not a firing state")
    lowest = next(i for i, k in enumerate(firing) if k > 0)
    return {firing[shift:] + (0,) * shift for shift in range(1, lowest + 1)}


def rising_factorial(x: int, n: int) -> int:
    out = 1
    for i in range(n):
        out *= x + i
    return out


def reduced_state_count(N: int, T: int) -> int:
    """``1 + T^(N-1) / (N-1)!`` with the rising factorial."""
    return 1 + rising_factorial(T, N - 1) // math.factorial(N - 1)


def enumerate_firing_states(N: int, T: int) -> list[GlobalState]:
    """Global states with k_T > 0 in lexicographic order."""
    return [s for s in _compositions(N, T) if s[-1] > 0]


@dataclass
class ReducedDtmc(SparseDtmc):
    """Reduced chain; ``provenance`` maps each removed state to (its firing target, chain length)."""

    provenance: dict[GlobalState, tuple[GlobalState, int]] = field(default_factory=dict)


def build_reduced_dtmc(dtmc: SparseDtmc, params: ModelParams) -> ReducedDtmc:
    """Collapse every deterministic chain of ``dtmc`` onto its next firing state."""
    if dtmc.kind != "population":
        raise ModelError("reduction expects a population DTMC")
    kept = [s for s in dtmc.states if s is INIT or is_firing(s)]
    new_index = {s: i for i, s in enumerate(kept)}
    old_states = dtmc.states
    target = np.empty(dtmc.n, dtype=np.int64)
    provenance: dict[GlobalState, tuple[GlobalState, int]] = {}
    for i, s in enumerate(old_states):
        if s is INIT:
            target[i] = new_index[INIT]
            continue
        f = deterministic_successor(s)
        target[i] = new_index[f]
        if f != s:
            provenance[s] = (f, chain_length(s))

    exact = dtmc.exact_rows is not None
    m = dtmc.matrix
    rows: list[dict[int, object]] = []
    for s in kept:
        i = dtmc.index[s]
        parts: dict[int, list] = {}
        if exact:
            items = dtmc.exact_rows[i].items()
        else:
            lo, hi = m.indptr[i], m.indptr[i + 1]
            items = zip(m.indices[lo:hi].tolist(), m.data[lo:hi].tolist())
        for j, p in items:
            parts.setdefault(int(target[j]), []).append(p)
        if exact:
            rows.append({t: sum(ps) for t, ps in parts.items()})
        else:
            rows.append({t: min(math.fsum(ps), 1.0) for t, ps in parts.items()})

    base = make_dtmc(rows, kept, population_labels(kept, params.N), initial=new_index[INIT], kind="reduced",
                     state_vars=dtmc.state_vars, exact=exact, params=params)
    return ReducedDtmc(base.matrix, base.initial, base.labels, base.states, kind=base.kind,
                       state_vars=base.state_vars, exact_rows=base.exact_rows, meta=base.meta,
                       provenance=provenance)


def transform_rewards(dtmc: SparseDtmc, reduced: ReducedDtmc, rewards: RewardStructure) -> RewardStructure:
    """Reward structure on ``reduced`` preserving expected reward to synchronised firing states.

    Every state reward of a kept state is folded into its outgoing transition
    rewards, so all reduced state rewards are zero.  A reduced transition
    ``q -> f`` carries the probability-weighted total reward of the original
    paths ``q n_1 ... n_k f`` (``n_i`` non-firing) it stands for, divided by
    the reduced transition probability.  For a firing source the chain is
    unique and this is just its total reward.
    """
    if dtmc.n != len(rewards.state):
        raise ModelError("reward structure does not match the DTMC")
    rewards.check_support(dtmc.matrix)
    P = dtmc.matrix
    rho = np.asarray(rewards.state, dtype=float)
    iota = rewards.trans.todok()

    # reward of walking a deterministic chain from a state to its firing target
    chain_reward = np.zeros(dtmc.n)
    by_length = sorted(reduced.provenance.items(), key=lambda item: item[1][1])
    for s, (_, length) in by_length:
        i = dtmc.index[s]
        j = int(P.indices[P.indptr[i]])
        chain_reward[i] = rho[i] + iota.get((i, j), 0.0) + chain_reward[j]

    old_to_new = {i: reduced.index[s] for i, s in enumerate(dtmc.states) if s in reduced.index}
    target_of = np.array([old_to_new[i] if i in old_to_new else reduced.index[reduced.provenance[s][0]]
                          for i, s in enumerate(dtmc.states)])

    new_rows: list[dict[int, float]] = []
    for s in reduced.states:
        i = dtmc.index[s]
        weighted: dict[int, float] = {}
        lo, hi = P.indptr[i], P.indptr[i + 1]
        for j, p in zip(P.indices[lo:hi].tolist(), P.data[lo:hi].tolist()):
            total = rho[i] + iota.get((i, j), 0.0) + chain_reward[j]
            t = int(target_of[j])
            weighted[t] = weighted.get(t, 0.0) + p * total
        probs = dict(reduced.successors(reduced.index[s]))
        new_rows.append({t: w / probs[t] for t, w in weighted.items() if probs.get(t, 0) > 0})

    n = reduced.n
    r, c, v = [], [], []
    for q, row in enumerate(new_rows):
        for t, val in sorted(row.items()):
            r.append(q)
            c.append(t)
            v.append(val)
    trans = sp.csr_matrix((v, (r, c)), shape=(n, n))
    return RewardStructure(np.zeros(n), trans)
