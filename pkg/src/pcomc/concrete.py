"""Concrete model: every oscillator is tracked individually, plus an environment counter.

A round starts with the environment resetting its counter, then each
oscillator in turn moves from start to update mode (possibly firing and
incrementing the counter), and finally all phases are updated at once.
When some oscillator sits at phase T the start-mode oscillators are visited
from the highest phase downwards, so that firings cascade within the round.
"""
from __future__ import annotations

import itertools
from collections import deque
from fractions import Fraction
from typing import NamedTuple, Union

import numpy as np
import scipy.sparse as sp

from .dtmc import INIT, BudgetExceeded, SparseDtmc
from .params import ModelParams
from .population import exact_mu

DEFAULT_BUDGET = 5_000_000

Number = Union[float, Fraction]


class ConcreteState(NamedTuple):
    env_update: bool
    counter: int
    phases: tuple[int, ...]
    updated: tuple[bool, ...]

    @property
    def in_round_start(self) -> bool:
        """True for states where the environment and every oscillator are in start mode."""
        return not self.env_update and not any(self.updated)

    @property
    def synchronised(self) -> bool:
        return len(set(self.phases)) == 1


def initial_state(phases: tuple[int, ...]) -> ConcreteState:
    return ConcreteState(False, 0, tuple(phases), (False,) * len(phases))


def _set_updated(s: ConcreteState, w: int, counter: int) -> ConcreteState:
    updated = s.updated[:w] + (True,) + s.updated[w + 1:]
    return ConcreteState(True, counter, s.phases, updated)


def concrete_transitions(s: ConcreteState, params: ModelParams, exact: bool = False) -> list[tuple[ConcreteState, Number]]:
    """Successors of ``s`` with their probabilities; zero-probability moves are omitted."""
    T, R = params.T, params.R
    mu: Number = exact_mu(params.mu) if exact else params.mu
    one: Number = Fraction(1) if exact else 1.0
    out: list[tuple[ConcreteState, Number]] = []

    if not s.env_update:
        # environment reset opens the round
        return [(ConcreteState(True, 0, s.phases, s.updated), one)]

    start = [u for u, done in enumerate(s.updated) if not done]
    c = s.counter
    if not start:
        # all oscillators update their phase simultaneously
        phases = []
        for phase in s.phases:
            if phase == T:
                phases.append(1)
            elif phase <= R:
                phases.append(phase + 1)
            elif phase + params.pert(phase, c) + 1 <= T:
                phases.append(phase + params.pert(phase, c) + 1)
            else:
                phases.append(1)
        return [(ConcreteState(False, c, tuple(phases), (False,) * len(phases)), one)]

    if T not in s.phases:
        # nobody fires this round; the order of mode changes is irrelevant
        p = one / len(start)
        return [(_set_updated(s, w, c), p) for w in start]

    at_top = [u for u in start if s.phases[u] == T]
    if at_top:
        m = len(at_top)
        for w in at_top:
            out.append((_set_updated(s, w, c + 1), (1 - mu) / m))
            out.append((_set_updated(s, w, c), mu / m))
    else:
        # only the highest remaining start-mode phase may move
        highest = max(s.phases[u] for u in start)
        group = [u for u in start if s.phases[u] == highest]
        m = len(group)
        # refractory oscillators are never pushed over the threshold
        fires = params.update_table[highest][c] > T
        for w in group:
            if fires:
                out.append((_set_updated(s, w, c + 1), (1 - mu) / m))
                out.append((_set_updated(s, w, c), mu / m))
            else:
                out.append((_set_updated(s, w, c), one / m))
    return [(t, p) for t, p in out if p != 0]


def concrete_labels(states: list) -> dict[str, np.ndarray]:
    n = len(states)
    labels = {name: np.zeros(n, dtype=bool) for name in ("init", "synch", "round_start")}
    for i, s in enumerate(states):
        if s is INIT:
            labels["init"][i] = True
        else:
            labels["synch"][i] = s.synchronised
            labels["round_start"][i] = s.in_round_start
    return labels


def build_concrete_dtmc(params: ModelParams, budget: int = DEFAULT_BUDGET, exact: bool = False) -> SparseDtmc:
    """Breadth-first construction from an initial state that picks every phase uniformly.

    Index 0 is the initial state; it moves to each of the ``T**N`` phase
    assignments (all modes start, counter 0) with probability ``1/T**N``.
    """
    params.validate()
    N, T = params.N, params.T
    if T ** N + 1 > budget:
        raise BudgetExceeded(budget, "concrete model")
    states: list = [INIT]
    index: dict = {INIT: 0}
    indptr = [0]
    cols: list[int] = []
    data: list[float] = []
    exact_rows: list[dict[int, Fraction]] | None = [] if exact else None

    def intern(t: ConcreteState) -> int:
        j = index.get(t)
        if j is None:
            j = len(states)
            if j >= budget:
                raise BudgetExceeded(budget, "concrete model")
            index[t] = j
            states.append(t)
            queue.append(t)
        return j

    queue: deque = deque()
    p0: Number = Fraction(1, T ** N) if exact else 1.0 / T ** N
    first = [(intern(initial_state(ph)), p0) for ph in itertools.product(range(1, T + 1), repeat=N)]
    rows_pending = [first]

    def emit(row: list[tuple[int, Number]]) -> None:
        row.sort()
        for j, p in row:
            cols.append(j)
            data.append(float(p))
        indptr.append(len(cols))
        if exact_rows is not None:
            exact_rows.append(dict(row))

    emit(rows_pending.pop())
    while queue:
        s = queue.popleft()
        emit([(intern(t), p) for t, p in concrete_transitions(s, params, exact)])

    n = len(states)
    matrix = sp.csr_matrix((np.array(data), np.array(cols, dtype=np.int64), np.array(indptr, dtype=np.int64)),
                           shape=(n, n))
    state_vars = ("env_mode", "counter") + tuple(f"phase{u}" for u in range(1, N + 1)) + \
        tuple(f"mode{u}" for u in range(1, N + 1))
    return SparseDtmc(matrix, 0, concrete_labels(states), states, kind="concrete", state_vars=state_vars,
                      exact_rows=exact_rows, meta={"params": params})
