"""Sparse DTMC container shared by the model builders and the analysis layer."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Hashable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

ROW_SUM_TOL = 1e-12


class ModelError(RuntimeError):
    """Structural problem in a model (non-stochastic row, bad label, ...)."""


class BudgetExceeded(RuntimeError):
    """State-space construction exceeded the configured state budget."""

    def __init__(self, budget: int, what: str = "model"):
        super().__init__(f"{what} exceeds the state budget of {budget} states")
        self.budget = budget


@dataclass
class RewardStructure:
    """State rewards (vector) and transition rewards (sparse, aligned with the DTMC)."""

    state: np.ndarray
    trans: sp.csr_matrix

    @classmethod
    def zeros(cls, n: int) -> "RewardStructure":
        return cls(np.zeros(n), sp.csr_matrix((n, n)))

    @classmethod
    def steps(cls, n: int) -> "RewardStructure":
        """Reward 1 per step taken, so expected reward = expected number of steps."""
        return cls(np.ones(n), sp.csr_matrix((n, n)))

    def check_support(self, matrix: sp.csr_matrix) -> None:
        trans = self.trans.tocoo()
        if trans.nnz == 0:
            return
        support = matrix.tocsr()
        missing = [(int(i), int(j)) for i, j, v in zip(trans.row, trans.col, trans.data)
                   if v != 0 and support[i, j] == 0]
        if missing:
            raise ModelError(f"transition rewards on {len(missing)} absent transitions, e.g. {missing[0]}")


@dataclass
class SparseDtmc:
    """An explicit DTMC: states ``0..n-1``, CSR transition matrix, labels as boolean masks.

    ``states`` holds a descriptor per index (a counts tuple, a concrete state, or
    :data:`INIT` for the distinguished initial state).  ``exact_rows`` is only
    populated when the model was built with rational arithmetic.
    """

    matrix: sp.csr_matrix
    initial: int
    labels: dict[str, np.ndarray]
    states: list[Any]
    kind: str = "generic"
    state_vars: tuple[str, ...] = ()
    rewards: RewardStructure | None = None
    exact_rows: list[dict[int, Fraction]] | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_transitions(self) -> int:
        return int(self.matrix.nnz)

    @cached_property
    def index(self) -> dict[Hashable, int]:
        return {s: i for i, s in enumerate(self.states)}

    def label_mask(self, name: str) -> np.ndarray:
        try:
            return self.labels[name]
        except KeyError:
            raise ModelError(f"unknown label {name!r}") from None

    def successors(self, i: int) -> list[tuple[int, float]]:
        m = self.matrix
        lo, hi = m.indptr[i], m.indptr[i + 1]
        return list(zip(m.indices[lo:hi].tolist(), m.data[lo:hi].tolist()))

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def check_stochastic(self, tol: float = ROW_SUM_TOL) -> None:
        sums = self.row_sums()
        bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
        if bad.size:
            raise ModelError(f"row {int(bad[0])} sums to {sums[bad[0]]!r}")
        if self.matrix.nnz and (self.matrix.data.min() < 0 or self.matrix.data.max() > 1):
            raise ModelError("transition probabilities must lie in [0, 1]")
        if self.exact_rows is not None:
            for i, row in enumerate(self.exact_rows):
                if sum(row.values()) != 1:
                    raise ModelError(f"exact row {i} sums to {sum(row.values())}")


class _Init:
    """Descriptor of the distinguished initial state (no phases assigned yet)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INIT"

    def __reduce__(self):
        return (_Init, ())


INIT = _Init()


def rows_to_csr(rows: Sequence[Mapping[int, Any]], n: int | None = None) -> sp.csr_matrix:
    """Turn ``rows[i] = {j: p}`` into a CSR matrix, dropping zero entries."""
    n = len(rows) if n is None else n
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for row in rows:
        for j in sorted(row):
            p = float(row[j])
            if p != 0.0:
                indices.append(j)
                data.append(p)
        indptr.append(len(indices))
    return sp.csr_matrix((np.array(data, dtype=float), np.array(indices, dtype=np.int64),
                          np.array(indptr, dtype=np.int64)), shape=(n, n))


def make_dtmc(rows: Sequence[Mapping[int, Any]], states: list[Any], labels: dict[str, np.ndarray],
              initial: int = 0, kind: str = "generic", state_vars: tuple[str, ...] = (),
              exact: bool = False, **meta: Any) -> SparseDtmc:
    exact_rows = None
    if exact:
        exact_rows = [{j: p for j, p in row.items() if p != 0} for row in rows]
    return SparseDtmc(rows_to_csr(rows, len(states)), initial, labels, states, kind=kind,
                      state_vars=state_vars, exact_rows=exact_rows, meta=dict(meta))
