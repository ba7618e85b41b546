"""Reachability and expected-reward computations on sparse DTMCs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve_triangular

from ..dtmc import RewardStructure, SparseDtmc

TOLERANCE = 1e-12
MAX_ITERATIONS = 10**6
DENSE_LIMIT = 2000


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass
class SolverStats:
    """Accumulates the work of the linear solves behind one query."""

    iterations: int = 0
    residual: float = 0.0

    def record(self, iterations: int, residual: float) -> None:
        self.iterations += iterations
        self.residual = max(self.residual, residual)


def _transpose(dtmc: SparseDtmc) -> sp.csr_matrix:
    cached = dtmc.meta.get("_transpose")
    if cached is None:
        cached = dtmc.matrix.T.tocsr()
        dtmc.meta["_transpose"] = cached
    return cached


def backward_reach(dtmc: SparseDtmc, targets: np.ndarray, through: np.ndarray) -> np.ndarray:
    """States that reach ``targets`` along a path whose other states all lie in ``through``."""
    pred = _transpose(dtmc)
    visited = targets.copy()
    frontier = np.flatnonzero(visited)
    while frontier.size:
        sub = pred[frontier]
        cand = np.unique(sub.indices)
        new = cand[through[cand] & ~visited[cand]]
        visited[new] = True
        frontier = new
    return visited


def prob0(dtmc: SparseDtmc, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """States where ``a U b`` holds with probability 0."""
    return ~backward_reach(dtmc, b, a)


def prob1(dtmc: SparseDtmc, a: np.ndarray, b: np.ndarray, no: np.ndarray | None = None) -> np.ndarray:
    """States where ``a U b`` holds with probability 1."""
    if no is None:
        no = prob0(dtmc, a, b)
    return ~backward_reach(dtmc, no, a & ~b)


def solve_linear(A: sp.csr_matrix, b: np.ndarray, method: str = "gauss-seidel", tol: float = TOLERANCE,
                 max_iter: int = MAX_ITERATIONS, stats: SolverStats | None = None,
                 backward: bool = True) -> np.ndarray:
    """Solve ``A x = b`` where ``A = I - P`` restricted to transient states.

    ``method`` is ``"gauss-seidel"`` (stops on relative residual ``tol``) or
    ``"dense"`` (LU, only for up to ``DENSE_LIMIT`` unknowns).  Gauss-Seidel
    sweeps from the last unknown to the first unless ``backward`` is false;
    models built breadth-first mostly point to higher indices, which makes the
    backward sweep converge faster.
    """
    n = A.shape[0]
    if n == 0:
        return np.zeros(0)
    scale = float(np.max(np.abs(b))) if b.size else 0.0
    if scale == 0.0:
        if stats is not None:
            stats.record(0, 0.0)
        return np.zeros(n)
    if method == "dense":
        if n > DENSE_LIMIT:
            raise ValueError(f"dense solve limited to {DENSE_LIMIT} unknowns, got {n}")
        x = np.linalg.solve(A.toarray(), b)
        residual = float(np.max(np.abs(b - A @ x))) / scale
        if stats is not None:
            stats.record(1, residual)
        return x
    if method != "gauss-seidel":
        raise ValueError(f"unknown solver method {method!r}")

    A = A.tocsr()
    if backward:
        sweep, rest = sp.triu(A, format="csr"), sp.tril(A, k=-1, format="csr")
    else:
        sweep, rest = sp.tril(A, format="csr"), sp.triu(A, k=1, format="csr")
    x = np.zeros(n)
    residual = np.inf
    for it in range(1, max_iter + 1):
        x = spsolve_triangular(sweep, b - rest @ x, lower=not backward)
        residual = float(np.max(np.abs(b - A @ x))) / scale
        if residual < tol:
            if stats is not None:
                stats.record(it, residual)
            return x
    raise SolverError(f"Gauss-Seidel did not converge in {max_iter} iterations", residual)


def prob_next(dtmc: SparseDtmc, target: np.ndarray) -> np.ndarray:
    return dtmc.matrix @ target.astype(float)


def prob_bounded_until(dtmc: SparseDtmc, a: np.ndarray, b: np.ndarray, k: int) -> np.ndarray:
    if k < 0:
        raise ValueError("step bound must be nonnegative")
    x = b.astype(float)
    active = a & ~b
    for _ in range(k):
        x = np.where(b, 1.0, np.where(active, dtmc.matrix @ x, 0.0))
    return x


def prob_unbounded_until(dtmc: SparseDtmc, a: np.ndarray, b: np.ndarray, method: str = "gauss-seidel",
                         stats: SolverStats | None = None) -> np.ndarray:
    no = prob0(dtmc, a, b)
    yes = prob1(dtmc, a, b, no)
    maybe = ~(no | yes)
    x = yes.astype(float)
    idx = np.flatnonzero(maybe)
    if idx.size:
        P = dtmc.matrix
        sub = P[idx]
        A = sp.identity(idx.size, format="csr") - sub[:, idx]
        rhs = sub @ yes.astype(float)
        x[idx] = solve_linear(A.tocsr(), rhs, method=method, stats=stats)
    elif stats is not None:
        stats.record(0, 0.0)
    return np.clip(x, 0.0, 1.0)


def expected_reward(dtmc: SparseDtmc, rewards: RewardStructure, target: np.ndarray, method: str = "gauss-seidel",
                    stats: SolverStats | None = None) -> np.ndarray:
    """Expected reward accumulated before first reaching ``target`` (``inf`` if that is not certain)."""
    everywhere = np.ones(dtmc.n, dtype=bool)
    sure = prob1(dtmc, everywhere, target)
    x = np.full(dtmc.n, np.inf)
    x[target] = 0.0
    idx = np.flatnonzero(sure & ~target)
    if idx.size:
        P = dtmc.matrix[idx]
        trans = rewards.trans.tocsr()[idx]
        rhs = np.asarray(rewards.state, dtype=float)[idx] + np.asarray(P.multiply(trans).sum(axis=1)).ravel()
        A = sp.identity(idx.size, format="csr") - P[:, idx]
        x[idx] = solve_linear(A.tocsr(), rhs, method=method, stats=stats)
    elif stats is not None:
        stats.record(0, 0.0)
    return x
