"""Model parameters, phase response functions and the refractory function."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from functools import cached_property
from typing import Any, Sequence


class ParamsError(ValueError):
    """Raised when a parameter set violates one of its bounds."""


@dataclass(frozen=True)
class PhaseResponseFunction:
    """Maps (phase, perceived firings, coupling) to an integer phase shift.

    ``kind="linear"`` computes ``[phase * alpha * epsilon]`` with rounding half
    away from zero.  ``kind="table"`` looks the value up in a dense grid with
    ``values[phase - 1][alpha]``; epsilon is ignored in that case.
    """

    kind: str = "linear"
    values: tuple[tuple[int, ...], ...] | None = None

    @classmethod
    def table(cls, values: Sequence[Sequence[int]]) -> "PhaseResponseFunction":
        return cls("table", tuple(tuple(int(v) for v in row) for row in values))

    def __call__(self, phase: int, alpha: int, epsilon: float) -> int:
        if self.kind == "linear":
            # decimal arithmetic so that e.g. 9*5*0.115 is exactly 5.175
            product = Decimal(phase) * Decimal(alpha) * Decimal(repr(float(epsilon)))
            return int(product.quantize(Decimal(1), rounding=ROUND_HALF_UP))
        if self.kind == "table":
            try:
                if phase < 1 or alpha < 0:
                    raise IndexError
                return self.values[phase - 1][alpha]
            except (IndexError, TypeError):
                raise ParamsError(f"phase response table has no entry for phase={phase}, alpha={alpha}") from None
        raise ParamsError(f"unknown phase response kind {self.kind!r}")

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "table":
            return {"kind": "table", "values": [list(row) for row in self.values]}
        return {"kind": self.kind}


def refr(phase: int, delta: int, R: int) -> int:
    """Refractory function: phases in ``[1, R]`` ignore the perturbation."""
    if 1 <= phase <= R:
        return phase
    return phase + delta


@dataclass(frozen=True)
class ModelParams:
    N: int
    T: int
    R: int
    epsilon: float
    mu: float
    prf: PhaseResponseFunction = field(default_factory=PhaseResponseFunction)

    def validate(self) -> "ModelParams":
        validate(self)
        return self

    def pert(self, phase: int, alpha: int) -> int:
        return self.prf(phase, alpha, self.epsilon)

    @cached_property
    def update_table(self) -> tuple[tuple[int, ...], ...]:
        """``update_table[phase][alpha] = 1 + refr(phase, pert(phase, alpha))``.

        Row 0 is unused so that phases index directly.
        """
        rows = [()]
        for phase in range(1, self.T + 1):
            rows.append(tuple(1 + refr(phase, self.pert(phase, a), self.R) for a in range(self.N + 1)))
        return tuple(rows)

    def fires(self, phase: int, alpha: int) -> bool:
        return self.update_table[phase][alpha] > self.T

    def to_dict(self) -> dict[str, Any]:
        return {"N": self.N, "T": self.T, "R": self.R, "epsilon": self.epsilon, "mu": self.mu,
                "prf": self.prf.to_dict()}

    def replace(self, **changes: Any) -> "ModelParams":
        values = {"N": self.N, "T": self.T, "R": self.R, "epsilon": self.epsilon, "mu": self.mu, "prf": self.prf}
        values.update(changes)
        return ModelParams(**values)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def validate(params: ModelParams) -> None:
    """Check every parameter bound, raising :class:`ParamsError` on the first violation."""
    for name in ("N", "T", "R"):
        if not _is_int(getattr(params, name)):
            raise ParamsError(f"{name} must be an integer")
    if params.N < 1:
        raise ParamsError("N must be at least 1")
    if params.T < 1:
        raise ParamsError("T must be at least 1")
    if params.R < 0:
        raise ParamsError("R must be nonnegative")
    if params.R > params.T:
        raise ParamsError("R exceeds T")
    for name in ("epsilon", "mu"):
        value = getattr(params, name)
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ParamsError(f"{name} must be a finite real number")
    if params.epsilon < 0:
        raise ParamsError("epsilon must be nonnegative")
    if not 0 <= params.mu <= 1:
        raise ParamsError("mu out of [0,1]")

    prf = params.prf
    if prf.kind == "table":
        values = prf.values
        if values is None or len(values) != params.T or any(len(row) != params.N + 1 for row in values):
            raise ParamsError(f"phase response table must be {params.T} x {params.N + 1}")
    elif prf.kind != "linear":
        raise ParamsError(f"unknown phase response kind {prf.kind!r}")

    for phase in range(1, params.T + 1):
        row = [params.pert(phase, a) for a in range(params.N + 1)]
        if row[0] != 0:
            raise ParamsError(f"phase response must be 0 for alpha=0 (phase {phase})")
        if any(v < 0 for v in row):
            raise ParamsError(f"phase response must be nonnegative (phase {phase})")
        if any(b < a for a, b in zip(row, row[1:])):
            raise ParamsError(f"phase response must be nondecreasing in alpha (phase {phase})")
    # the failure-vector recursion stops at the first non-firing group, which
    # is only sound if firing is monotone in the phase
    for alpha in range(params.N + 1):
        for phase in range(1, params.T):
            if params.fires(phase, alpha) and not params.fires(phase + 1, alpha):
                raise ParamsError(
                    f"phase response makes phase {phase} fire but not phase {phase + 1} for alpha={alpha}")


def params_from_dict(data: Any) -> ModelParams:
    """Build and validate parameters from the JSON parameter-file schema."""
    if not isinstance(data, dict):
        raise ParamsError("parameter file must contain a JSON object")
    allowed = {"N", "T", "R", "epsilon", "mu", "prf"}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ParamsError(f"unknown parameter key(s): {', '.join(unknown)}")
    for key in ("N", "T", "R", "epsilon", "mu"):
        if key not in data:
            raise ParamsError(f"missing required parameter {key!r}")

    prf_data = data.get("prf", {"kind": "linear"})
    if not isinstance(prf_data, dict) or "kind" not in prf_data:
        raise ParamsError("prf must be an object with a 'kind' field")
    extra = sorted(set(prf_data) - {"kind", "values"})
    if extra:
        raise ParamsError(f"unknown prf key(s): {', '.join(extra)}")
    if prf_data["kind"] == "linear":
        if "values" in prf_data:
            raise ParamsError("linear prf takes no 'values'")
        prf = PhaseResponseFunction()
    elif prf_data["kind"] == "table":
        values = prf_data.get("values")
        if not isinstance(values, list) or not all(isinstance(r, list) for r in values):
            raise ParamsError("table prf requires 'values' as a list of lists")
        if not all(_is_int(v) for r in values for v in r):
            raise ParamsError("table prf values must be integers")
        prf = PhaseResponseFunction.table(values)
    else:
        raise ParamsError(f"unknown phase response kind {prf_data['kind']!r}")

    params = ModelParams(N=data["N"], T=data["T"], R=data["R"], epsilon=data["epsilon"], mu=data["mu"], prf=prf)
    validate(params)
    return params
