"""Population (counting-abstraction) model of a fully coupled PCO network.

A global state is a tuple ``(k_1, ..., k_T)`` of oscillator counts per phase.
A failure vector is a tuple of the same length whose entries are either a
number of broadcast failures or :data:`STAR` (the group at that phase did not
fire).  Phases are 1-based throughout; tuple positions are ``phase - 1``.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterator, Sequence, Union

import numpy as np

from .dtmc import INIT, SparseDtmc, make_dtmc
from .params import ModelParams

STAR = None

GlobalState = tuple[int, ...]
FailureVector = tuple[Union[int, None], ...]
Number = Union[float, Fraction]


def _compositions(total: int, parts: int) -> Iterator[GlobalState]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_global_states(params: ModelParams) -> list[GlobalState]:
    """All weak compositions of N into T parts, in lexicographic order."""
    return list(_compositions(params.N, params.T))


def num_global_states(N: int, T: int) -> int:
    return math.comb(N + T - 1, N)


def is_firing(state: Sequence[int]) -> bool:
    return state[-1] > 0


def is_synchronised(state: Sequence[int], N: int) -> bool:
    return N in state


def alphas(state: Sequence[int], fvec: FailureVector, params: ModelParams) -> list[int]:
    """``result[phase]`` is the number of firings perceived by the group at ``phase``.

    Computed from phase T downwards; index 0 is unused.
    """
    T = params.T
    out = [0] * (T + 1)
    for phase in range(T - 1, 0, -1):
        above = phase + 1
        f = fvec[above - 1]
        if f is not STAR and params.fires(above, out[above]):
            out[phase] = out[above] + state[above - 1] - f
        else:
            out[phase] = out[above]
    return out


def alpha(state: Sequence[int], fvec: FailureVector, phase: int, params: ModelParams) -> int:
    return alphas(state, fvec, params)[phase]


def update_fire(state: Sequence[int], fvec: FailureVector, phase: int, params: ModelParams) -> tuple[int, bool]:
    updated = params.update_table[phase][alpha(state, fvec, phase, params)]
    return updated, updated > params.T


def tau(state: Sequence[int], phase: int, fvec: FailureVector, params: ModelParams) -> int:
    """Phase that the group at ``phase`` moves to in the next step."""
    updated, fires = update_fire(state, fvec, phase, params)
    return 1 if fires else updated


def successor(state: Sequence[int], fvec: FailureVector, params: ModelParams) -> GlobalState:
    T = params.T
    perceived = alphas(state, fvec, params)
    table = params.update_table
    counts = [0] * T
    for phase in range(1, T + 1):
        k = state[phase - 1]
        if not k:
            continue
        updated = table[phase][perceived[phase]]
        counts[0 if updated > T else updated - 1] += k
    return tuple(counts)


def enumerate_failure_vectors(state: Sequence[int], params: ModelParams) -> list[FailureVector]:
    """All possible failure vectors of ``state``, following the descending recursion.

    Each firing group branches over 0..k failures; the first group that does
    not fire ends the recursion and the remaining prefix is padded with STAR.
    """
    out: list[FailureVector] = []

    def expand(phase: int, suffix: tuple, perceived: int) -> None:
        if phase == 0:
            out.append(suffix)
        elif params.fires(phase, perceived):
            k = state[phase - 1]
            for f in range(k + 1):
                expand(phase - 1, (f,) + suffix, perceived + k - f)
        else:
            out.append((STAR,) * phase + suffix)

    expand(params.T, (), 0)
    return out


def pfail(k: int, f: int, mu: Number) -> Number:
    """Probability of exactly ``f`` broadcast failures among ``k`` firing oscillators."""
    if not 0 <= f <= k:
        raise ValueError(f"need 0 <= f <= k, got f={f}, k={k}")
    return mu ** f * (1 - mu) ** (k - f) * math.comb(k, f)


def pfailvec(state: Sequence[int], fvec: FailureVector, mu: Number) -> Number:
    prob: Number = 1
    for k, f in zip(state, fvec):
        if f is not STAR:
            prob *= pfail(k, f, mu)
    return prob


def exact_mu(mu: float) -> Fraction:
    """Rational value of ``mu`` as written in decimal (0.1 -> 1/10)."""
    return Fraction(repr(float(mu)))


def initial_probability(state: Sequence[int], params: ModelParams, exact: bool = False) -> Number:
    """Probability that uniform independent phases produce ``state``."""
    ways = math.factorial(params.N)
    for k in state:
        ways //= math.factorial(k)
    if exact:
        return Fraction(ways, params.T ** params.N)
    return ways / params.T ** params.N


def transitions(state: GlobalState, params: ModelParams, exact: bool = False) -> dict[GlobalState, Number]:
    """Successor distribution of ``state``, summing failure vectors with equal successors."""
    mu = exact_mu(params.mu) if exact else params.mu
    parts: dict[GlobalState, list[Number]] = {}
    for fvec in enumerate_failure_vectors(state, params):
        p = pfailvec(state, fvec, mu)
        if p == 0:
            continue
        parts.setdefault(successor(state, fvec, params), []).append(p)
    if exact:
        return {t: sum(ps) for t, ps in parts.items()}
    # several rounded terms can add up to a hair above one
    return {t: min(math.fsum(ps), 1.0) for t, ps in parts.items()}


def population_labels(states: list, N: int) -> dict[str, np.ndarray]:
    n = len(states)
    labels = {name: np.zeros(n, dtype=bool) for name in ("init", "synch", "synch_firing", "firing")}
    for i, s in enumerate(states):
        if s is INIT:
            labels["init"][i] = True
            continue
        labels["synch"][i] = N in s
        labels["synch_firing"][i] = s[-1] == N
        labels["firing"][i] = s[-1] > 0
    return labels


def build_population_dtmc(params: ModelParams, exact: bool = False) -> SparseDtmc:
    """DTMC over all global states plus the unconfigured initial state (index 0).

    Labels: ``synch`` (some phase holds all N oscillators), ``synch_firing``
    (all N oscillators at phase T), ``firing`` (k_T > 0) and ``init``.
    """
    params.validate()
    states: list = [INIT] + enumerate_global_states(params)
    index = {s: i for i, s in enumerate(states)}
    rows: list[dict[int, Number]] = [{index[s]: initial_probability(s, params, exact) for s in states[1:]}]
    for s in states[1:]:
        rows.append({index[t]: p for t, p in transitions(s, params, exact).items()})
    return make_dtmc(rows, states, population_labels(states, params.N), initial=0, kind="population",
                     state_vars=tuple(f"k{i}" for i in range(1, params.T + 1)), exact=exact,
                     params=params)
