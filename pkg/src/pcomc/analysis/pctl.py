"""PCTL with reachability rewards: abstract syntax, parser and model checker.

Concrete syntax follows the usual PRISM conventions::

    "synch"  true  false  !f  f & g  f | g  f => g  (f)
    P>=0.9 [ F "synch" ]   P=? [ true U<=20 "synch" ]   P<0.1 [ X !"synch" ]
    R=? [ F "synch" ]      R<=12.5 [ F "synch" ]
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..dtmc import ModelError, RewardStructure, SparseDtmc
from .solvers import (SolverStats, expected_reward, prob_bounded_until, prob_next,
                      prob_unbounded_until)


class PctlSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


# -- abstract syntax ---------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    label: str


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Not:
    sub: "StateFormula"


@dataclass(frozen=True)
class And:
    left: "StateFormula"
    right: "StateFormula"


@dataclass(frozen=True)
class Or:
    left: "StateFormula"
    right: "StateFormula"


@dataclass(frozen=True)
class Implies:
    left: "StateFormula"
    right: "StateFormula"


@dataclass(frozen=True)
class Next:
    sub: "StateFormula"


@dataclass(frozen=True)
class Until:
    left: "StateFormula"
    right: "StateFormula"
    bound: int | None = None


@dataclass(frozen=True)
class Eventually:
    sub: "StateFormula"
    bound: int | None = None


PathFormula = Union[Next, Until, Eventually]


@dataclass(frozen=True)
class ProbOp:
    """``P~lambda [path]``; ``comparison is None`` means the query form ``P=?``."""

    comparison: str | None
    bound: float | None
    path: PathFormula


@dataclass(frozen=True)
class RewardOp:
    """``R~r [ F target ]``; ``comparison is None`` means ``R=?``."""

    comparison: str | None
    bound: float | None
    target: "StateFormula"


StateFormula = Union[Atom, Const, Not, And, Or, Implies, ProbOp, RewardOp]

COMPARISONS = {
    "<": np.less,
    "<=": np.less_equal,
    ">=": np.greater_equal,
    ">": np.greater,
}


def is_query(formula: StateFormula) -> bool:
    return isinstance(formula, (ProbOp, RewardOp)) and formula.comparison is None


# -- parser ------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<string>"[^"]*")
  | (?P<number>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)
  | (?P<op>=\?|<=|>=|=>|[<>!&|()\[\]])
  | (?P<word>[A-Za-z_][A-Za-z_0-9]*)
""", re.VERBOSE)


@dataclass
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PctlSyntaxError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def error(self, message: str) -> PctlSyntaxError:
        where = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
        return PctlSyntaxError(f"{message}, found {where}", self.tok.pos)

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("op", "word"):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            raise self.error(f"expected {text!r}")

    def parse(self) -> StateFormula:
        f = self.implies()
        if self.tok.kind != "end":
            raise self.error("unexpected trailing input")
        return f

    def implies(self) -> StateFormula:
        left = self.disjunction()
        if self.accept("=>"):
            return Implies(left, self.implies())
        return left

    def disjunction(self) -> StateFormula:
        f = self.conjunction()
        while self.accept("|"):
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> StateFormula:
        f = self.unary()
        while self.accept("&"):
            f = And(f, self.unary())
        return f

    def unary(self) -> StateFormula:
        if self.accept("!"):
            return Not(self.unary())
        return self.primary()

    def primary(self) -> StateFormula:
        tok = self.tok
        if tok.kind == "string":
            self.i += 1
            return Atom(tok.text[1:-1])
        if self.accept("true"):
            return Const(True)
        if self.accept("false"):
            return Const(False)
        if self.accept("("):
            f = self.implies()
            self.expect(")")
            return f
        if self.accept("P"):
            comparison, bound = self.comparison(probability=True)
            self.expect("[")
            path = self.path()
            self.expect("]")
            return ProbOp(comparison, bound, path)
        if self.accept("R"):
            comparison, bound = self.comparison(probability=False)
            self.expect("[")
            self.expect("F")
            target = self.implies()
            self.expect("]")
            return RewardOp(comparison, bound, target)
        raise self.error("expected a state formula")

    def comparison(self, probability: bool) -> tuple[str | None, float | None]:
        if self.accept("=?"):
            return None, None
        tok = self.tok
        if tok.kind == "op" and tok.text in COMPARISONS:
            self.i += 1
            num = self.tok
            if num.kind != "number":
                raise self.error("expected a numeric bound")
            self.i += 1
            value = float(num.text)
            if probability and not 0.0 <= value <= 1.0:
                raise PctlSyntaxError(f"probability bound {value} outside [0,1]", num.pos)
            return tok.text, value
        raise self.error("expected a comparison (<, <=, >=, >) or =?")

    def step_bound(self) -> int | None:
        if self.accept("<="):
            tok = self.tok
            if tok.kind != "number" or not tok.text.isdigit():
                raise self.error("expected an integer step bound")
            self.i += 1
            return int(tok.text)
        return None

    def path(self) -> PathFormula:
        if self.accept("X"):
            return Next(self.unary())
        if self.accept("F"):
            bound = self.step_bound()
            return Eventually(self.unary(), bound)
        left = self.implies()
        self.expect("U")
        bound = self.step_bound()
        return Until(left, self.implies(), bound)


def parse_pctl(text: str) -> StateFormula:
    return _Parser(text).parse()


# -- model checking ----------------------------------------------------------

def _sat(dtmc: SparseDtmc, f: StateFormula, rewards: RewardStructure | None, stats: SolverStats | None) -> np.ndarray:
    if isinstance(f, Atom):
        return dtmc.label_mask(f.label).copy()
    if isinstance(f, Const):
        return np.full(dtmc.n, f.value, dtype=bool)
    if isinstance(f, Not):
        return ~_sat(dtmc, f.sub, rewards, stats)
    if isinstance(f, And):
        return _sat(dtmc, f.left, rewards, stats) & _sat(dtmc, f.right, rewards, stats)
    if isinstance(f, Or):
        return _sat(dtmc, f.left, rewards, stats) | _sat(dtmc, f.right, rewards, stats)
    if isinstance(f, Implies):
        return ~_sat(dtmc, f.left, rewards, stats) | _sat(dtmc, f.right, rewards, stats)
    if isinstance(f, (ProbOp, RewardOp)):
        if f.comparison is None:
            raise ModelError("=? queries may only appear at the top level")
        values = _values(dtmc, f, rewards, stats)
        return COMPARISONS[f.comparison](values, f.bound)
    raise TypeError(f"not a state formula: {f!r}")


def _values(dtmc: SparseDtmc, f: ProbOp | RewardOp, rewards: RewardStructure | None,
            stats: SolverStats | None) -> np.ndarray:
    if isinstance(f, RewardOp):
        rewards = rewards if rewards is not None else dtmc.rewards
        if rewards is None:
            raise ModelError("reward query on a model without a reward structure")
        return expected_reward(dtmc, rewards, _sat(dtmc, f.target, rewards, stats), stats=stats)
    path = f.path
    if isinstance(path, Next):
        return prob_next(dtmc, _sat(dtmc, path.sub, rewards, stats))
    if isinstance(path, Eventually):
        left, right, bound = np.ones(dtmc.n, dtype=bool), _sat(dtmc, path.sub, rewards, stats), path.bound
    else:
        left, right, bound = _sat(dtmc, path.left, rewards, stats), _sat(dtmc, path.right, rewards, stats), path.bound
    if bound is None:
        return prob_unbounded_until(dtmc, left, right, stats=stats)
    return prob_bounded_until(dtmc, left, right, bound)


def check(dtmc: SparseDtmc, formula: StateFormula | str, rewards: RewardStructure | None = None,
          stats: SolverStats | None = None) -> np.ndarray:
    """Per-state values of a query, or per-state satisfaction of a state formula."""
    if isinstance(formula, str):
        formula = parse_pctl(formula)
    if is_query(formula):
        return _values(dtmc, formula, rewards, stats)
    return _sat(dtmc, formula, rewards, stats)


def evaluate(dtmc: SparseDtmc, formula: StateFormula | str, rewards: RewardStructure | None = None,
             stats: SolverStats | None = None) -> float | bool:
    """Result at the initial state: a number for ``=?`` queries, a boolean otherwise."""
    if isinstance(formula, str):
        formula = parse_pctl(formula)
    result = check(dtmc, formula, rewards, stats)[dtmc.initial]
    return float(result) if is_query(formula) else bool(result)


def format_result(value: float | bool) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if math.isinf(value):
        return "inf"
    return repr(float(value))
