"""Abstraction from concrete to population states and a numerical correspondence check."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .analysis.pctl import evaluate
from .concrete import ConcreteState
from .dtmc import INIT, ModelError, SparseDtmc
from .population import GlobalState

TOLERANCE = 1e-10


def abstract_state(s: ConcreteState, T: int) -> GlobalState:
    """Count the oscillators at each phase; only defined on round-start states."""
    if s is INIT or not isinstance(s, ConcreteState) or not s.in_round_start:
        raise ValueError("abstraction is only defined for states with every mode equal to start")
    counts = [0] * T
    for phase in s.phases:
        counts[phase - 1] += 1
    return tuple(counts)


@dataclass
class AbstractionReport:
    """Outcome of comparing a concrete DTMC with its population DTMC.

    ``pairs`` maps a population transition (source, target) to the population
    probability and the aggregated concrete probability that deviates most from
    it over all concrete instantiations of the source.
    """

    pairs: dict[tuple[Any, GlobalState], tuple[float, float]] = field(default_factory=dict)
    max_discrepancy: float = 0.0
    sync_concrete: float = float("nan")
    sync_population: float = float("nan")
    sources_checked: int = 0

    @property
    def sync_discrepancy(self) -> float:
        return abs(self.sync_concrete - self.sync_population)

    def passed(self, tol: float = TOLERANCE) -> bool:
        return self.max_discrepancy <= tol and self.sync_discrepancy <= tol

    def to_json(self) -> str:
        return json.dumps({
            "max_discrepancy": self.max_discrepancy,
            "sync_concrete": self.sync_concrete,
            "sync_population": self.sync_population,
            "sync_discrepancy": self.sync_discrepancy,
            "sources_checked": self.sources_checked,
            "pairs": [
                {"source": "init" if src is INIT else list(src), "target": list(tgt),
                 "population": pp, "concrete": cp}
                for (src, tgt), (pp, cp) in sorted(self.pairs.items(), key=lambda kv: _pair_key(kv[0]))
            ],
        }, indent=2)

    def table(self) -> str:
        lines = [f"{'source':<28} {'target':<28} {'population':>22} {'concrete':>22}"]
        for (src, tgt), (pp, cp) in sorted(self.pairs.items(), key=lambda kv: _pair_key(kv[0])):
            name = "init" if src is INIT else str(src)
            lines.append(f"{name:<28} {str(tgt):<28} {pp:>22.17g} {cp:>22.17g}")
        lines.append(f"max discrepancy: {self.max_discrepancy:.3e}")
        lines.append(f"sync probability: concrete={self.sync_concrete!r} population={self.sync_population!r}")
        return "\n".join(lines)


def _pair_key(pair):
    src, tgt = pair
    return ((), tgt) if src is INIT else (src, tgt)


def _round_distribution(concrete: SparseDtmc, start: int, in_start, T: int, N: int) -> dict[GlobalState, float]:
    """Probability of each abstract state at the end of the round beginning in ``start``."""
    result: dict[GlobalState, float] = {}
    frontier = {start: 1.0}
    # a round is the reset, one mode change per oscillator and the phase update
    for _ in range(N + 2):
        nxt: dict[int, float] = {}
        for i, p in frontier.items():
            for j, q in concrete.successors(i):
                if in_start[j]:
                    key = abstract_state(concrete.states[j], T)
                    result[key] = result.get(key, 0.0) + p * q
                else:
                    nxt[j] = nxt.get(j, 0.0) + p * q
        frontier = nxt
        if not frontier:
            return result
    raise ModelError(f"round from concrete state {start} did not return to a round-start state")


def check_correspondence(concrete: SparseDtmc, population: SparseDtmc, tol: float = TOLERANCE,
                         compare_sync: bool = True) -> AbstractionReport:
    """Compare per-round concrete probabilities with population transitions, and sync probabilities."""
    params = population.meta["params"]
    if concrete.meta["params"] != params:
        raise ModelError("models were built from different parameters")
    T, N = params.T, params.N
    in_start = concrete.labels["round_start"]
    report = AbstractionReport()

    def compare(src_key, pop_index: int, aggregated: dict[GlobalState, float]) -> None:
        expected = {population.states[j]: p for j, p in population.successors(pop_index)}
        for tgt in set(expected) | set(aggregated):
            pp, cp = expected.get(tgt, 0.0), aggregated.get(tgt, 0.0)
            diff = abs(pp - cp)
            known = report.pairs.get((src_key, tgt))
            if known is None or diff > abs(known[0] - known[1]):
                report.pairs[(src_key, tgt)] = (pp, cp)
            report.max_discrepancy = max(report.max_discrepancy, diff)
        report.sources_checked += 1

    # the initial distribution, pushed through the abstraction
    initial: dict[GlobalState, float] = {}
    for j, p in concrete.successors(concrete.initial):
        key = abstract_state(concrete.states[j], T)
        initial[key] = initial.get(key, 0.0) + p
    compare(INIT, population.initial, initial)

    for i in range(concrete.n):
        if in_start[i]:
            key = abstract_state(concrete.states[i], T)
            compare(key, population.index[key], _round_distribution(concrete, i, in_start, T, N))

    if compare_sync:
        report.sync_concrete = float(evaluate(concrete, 'P=? [ F "synch" ]'))
        report.sync_population = float(evaluate(population, 'P=? [ F "synch" ]'))
    return report
