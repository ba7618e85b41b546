"""File formats: PRISM explicit files, PRISM-language models, parameter and reward files."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

import numpy as np
import scipy.sparse as sp

from .concrete import ConcreteState
from .dtmc import INIT, ModelError, RewardStructure, SparseDtmc
from .params import ModelParams, ParamsError, params_from_dict


def format_number(x: float) -> str:
    """Shortest decimal that round-trips to the same double."""
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


# -- parameter and reward files ----------------------------------------------

def load_params(path: str | Path) -> ModelParams:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParamsError(f"cannot read parameter file: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParamsError(f"malformed JSON in {path}: {exc}") from None
    return params_from_dict(data)


def load_rewards(path: str | Path, dtmc: SparseDtmc) -> RewardStructure:
    """Read ``{"state_rewards": [...] | {"i": r}, "transition_rewards": [[i, j, r], ...]}``."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    unknown = set(data) - {"state_rewards", "transition_rewards"}
    if unknown:
        raise ModelError(f"unknown reward key(s): {', '.join(sorted(unknown))}")
    state = np.zeros(dtmc.n)
    given = data.get("state_rewards", [])
    if isinstance(given, list):
        if len(given) not in (0, dtmc.n):
            raise ModelError(f"expected {dtmc.n} state rewards, got {len(given)}")
        state[:len(given)] = given
    else:
        for key, value in given.items():
            state[int(key)] = value
    triples = data.get("transition_rewards", [])
    rows = [int(t[0]) for t in triples]
    cols = [int(t[1]) for t in triples]
    vals = [float(t[2]) for t in triples]
    rewards = RewardStructure(state, sp.csr_matrix((vals, (rows, cols)), shape=(dtmc.n, dtmc.n)))
    rewards.check_support(dtmc.matrix)
    return rewards


# -- PRISM explicit format ---------------------------------------------------

@dataclass
class ExportBundle:
    tra: str
    sta: str
    lab: str
    srew: str | None = None
    trew: str | None = None

    def write(self, prefix: str | Path) -> list[Path]:
        written = []
        for ext in ("tra", "sta", "lab", "srew", "trew"):
            text = getattr(self, ext)
            if text is None:
                continue
            path = Path(f"{prefix}.{ext}")
            path.write_text(text, encoding="utf-8", newline="\n")
            written.append(path)
        return written

    @classmethod
    def read(cls, prefix: str | Path) -> "ExportBundle":
        def opt(ext: str) -> str | None:
            path = Path(f"{prefix}.{ext}")
            return path.read_text(encoding="utf-8") if path.exists() else None
        return cls(Path(f"{prefix}.tra").read_text(encoding="utf-8"),
                   Path(f"{prefix}.sta").read_text(encoding="utf-8"),
                   Path(f"{prefix}.lab").read_text(encoding="utf-8"), opt("srew"), opt("trew"))


def _state_values(dtmc: SparseDtmc, s: Any, i: int) -> tuple[int, ...]:
    width = len(dtmc.state_vars)
    if s is INIT:
        return (0,) * width
    if isinstance(s, ConcreteState):
        return (int(s.env_update), s.counter) + s.phases + tuple(int(m) for m in s.updated)
    if isinstance(s, tuple):
        return s
    return (i,)


def _label_order(dtmc: SparseDtmc) -> list[str]:
    names = sorted(dtmc.labels)
    if "init" in names:
        names.remove("init")
        names.insert(0, "init")
    return names


def export_explicit(dtmc: SparseDtmc, rewards: RewardStructure | None = None) -> ExportBundle:
    m = dtmc.matrix.tocsr()
    m.sort_indices()
    out = io.StringIO()
    out.write(f"{dtmc.n} {m.nnz}\n")
    for i in range(dtmc.n):
        lo, hi = m.indptr[i], m.indptr[i + 1]
        for j, p in zip(m.indices[lo:hi], m.data[lo:hi]):
            out.write(f"{i} {j} {format_number(p)}\n")
    tra = out.getvalue()

    state_vars = dtmc.state_vars or ("s",)
    lines = ["(" + ",".join(state_vars) + ")"]
    for i, s in enumerate(dtmc.states):
        lines.append(f"{i}:(" + ",".join(str(v) for v in _state_values(dtmc, s, i)) + ")")
    sta = "\n".join(lines) + "\n"

    names = _label_order(dtmc)
    lines = [" ".join(f'{k}="{name}"' for k, name in enumerate(names))]
    masks = [dtmc.labels[name] for name in names]
    for i in range(dtmc.n):
        ids = [str(k) for k, mask in enumerate(masks) if mask[i]]
        if ids:
            lines.append(f"{i}: " + " ".join(ids))
    lab = "\n".join(lines) + "\n"

    srew = trew = None
    if rewards is not None:
        nz = np.flatnonzero(rewards.state)
        srew = f"{dtmc.n} {nz.size}\n" + "".join(f"{i} {format_number(rewards.state[i])}\n" for i in nz)
        t = rewards.trans.tocoo()
        entries = sorted((int(i), int(j), float(v)) for i, j, v in zip(t.row, t.col, t.data) if v != 0)
        trew = f"{dtmc.n} {len(entries)}\n" + "".join(f"{i} {j} {format_number(v)}\n" for i, j, v in entries)
    return ExportBundle(tra, sta, lab, srew, trew)


def _parse_state(values: tuple[int, ...], state_vars: tuple[str, ...]) -> Any:
    if state_vars and state_vars[0] == "env_mode":
        n = (len(values) - 2) // 2
        phases = values[2:2 + n]
        if all(v == 0 for v in phases):
            return INIT
        return ConcreteState(bool(values[0]), values[1], tuple(phases), tuple(bool(v) for v in values[2 + n:]))
    if state_vars and state_vars[0].startswith("k"):
        return INIT if sum(values) == 0 else tuple(values)
    return values[0] if len(values) == 1 else tuple(values)


def parse_explicit(bundle: ExportBundle, kind: str = "generic") -> tuple[SparseDtmc, RewardStructure | None]:
    """Inverse of :func:`export_explicit`; the initial state is the one labelled ``init`` (else 0)."""
    lines = bundle.tra.splitlines()
    n, m = (int(v) for v in lines[0].split())
    rows, cols, vals = [], [], []
    for line in lines[1:]:
        if not line.strip():
            continue
        i, j, p = line.split()
        rows.append(int(i))
        cols.append(int(j))
        vals.append(float(p))
    if len(vals) != m:
        raise ModelError(f"transition file declares {m} entries but has {len(vals)}")
    matrix = sp.csr_matrix((np.array(vals), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
                           shape=(n, n))

    sta_lines = bundle.sta.splitlines()
    state_vars = tuple(sta_lines[0].strip("()").split(","))
    states: list[Any] = [None] * n
    for line in sta_lines[1:]:
        idx, _, rest = line.partition(":")
        values = tuple(int(v) for v in rest.strip("()").split(","))
        states[int(idx)] = _parse_state(values, state_vars)

    lab_lines = bundle.lab.splitlines()
    names = {}
    for decl in lab_lines[0].split():
        k, _, name = decl.partition("=")
        names[int(k)] = name.strip('"')
    labels = {name: np.zeros(n, dtype=bool) for name in names.values()}
    for line in lab_lines[1:]:
        idx, _, ids = line.partition(":")
        for k in ids.split():
            labels[names[int(k)]][int(idx)] = True
    initial = int(np.flatnonzero(labels["init"])[0]) if "init" in labels and labels["init"].any() else 0
    if kind == "generic":
        kind = {"env_mode": "concrete"}.get(state_vars[0], "population" if state_vars[0].startswith("k") else "generic")
    dtmc = SparseDtmc(matrix, initial, labels, states, kind=kind, state_vars=state_vars)

    rewards = None
    if bundle.srew is not None or bundle.trew is not None:
        state = np.zeros(n)
        if bundle.srew:
            for line in bundle.srew.splitlines()[1:]:
                i, r = line.split()
                state[int(i)] = float(r)
        r_rows, r_cols, r_vals = [], [], []
        if bundle.trew:
            for line in bundle.trew.splitlines()[1:]:
                i, j, r = line.split()
                r_rows.append(int(i))
                r_cols.append(int(j))
                r_vals.append(float(r))
        rewards = RewardStructure(state, sp.csr_matrix((r_vals, (r_rows, r_cols)), shape=(n, n)))
    return dtmc, rewards


# -- PRISM language ----------------------------------------------------------

@dataclass
class PrismModel:
    model: str
    properties: str


def _assignment(names: Iterable[str], values: Iterable[int]) -> str:
    return "&".join(f"({name}'={value})" for name, value in zip(names, values))


def _guard(names: Iterable[str], values: Iterable[int]) -> str:
    return " & ".join(f"{name}={value}" for name, value in zip(names, values))


def export_prism_lang(params: ModelParams, kind: str = "population", dtmc: SparseDtmc | None = None) -> PrismModel:
    """A PRISM DTMC with one guarded command per state of the model built here.

    The commands enumerate the explicit transition relation over structured
    variables, so the PRISM semantics coincides with this package's model
    for any phase response function.
    """
    from .concrete import build_concrete_dtmc
    from .population import build_population_dtmc

    if dtmc is None:
        dtmc = build_population_dtmc(params) if kind == "population" else build_concrete_dtmc(params)
    N, T = params.N, params.T
    names = dtmc.state_vars
    if kind == "population":
        decls = [f"  {v} : [0..N] init 0;" for v in names]
        sync = " | ".join(f"{v}=N" for v in names)
        labels = [f'label "synch" = {sync};', f'label "synch_firing" = k{T}=N;']
    elif kind == "concrete":
        decls = ["  env_mode : [0..1] init 0;", "  counter : [0..N] init 0;"]
        decls += [f"  phase{u} : [0..T] init 0;" for u in range(1, N + 1)]
        decls += [f"  mode{u} : [0..1] init 0;" for u in range(1, N + 1)]
        sync = " & ".join(f"phase1=phase{u}" for u in range(2, N + 1)) or "true"
        sync = f"phase1>0 & {sync}" if N > 1 else "phase1>0"
        labels = [f'label "synch" = {sync};']
    else:
        raise ValueError(f"unknown model kind {kind!r}")

    out = io.StringIO()
    out.write(f"// {kind} model: N={N} T={T} R={params.R} epsilon={params.epsilon!r} mu={params.mu!r}\n")
    out.write(f"// phase response: {params.prf.kind}; the all-zero valuation is the unconfigured initial state\n")
    if kind == "concrete":
        out.write("// env_mode/mode_u: 0 = start, 1 = update\n")
    out.write("dtmc\n\n")
    out.write(f"const int N = {N};\nconst int T = {T};\n\n")
    out.write(f"module {kind}\n")
    out.write("\n".join(decls) + "\n\n")
    m = dtmc.matrix
    for i, s in enumerate(dtmc.states):
        guard = _guard(names, _state_values(dtmc, s, i))
        lo, hi = m.indptr[i], m.indptr[i + 1]
        updates = [f"{format_number(p)}:{_assignment(names, _state_values(dtmc, dtmc.states[j], j))}"
                   for j, p in zip(m.indices[lo:hi], m.data[lo:hi])]
        out.write(f"  [] {guard} -> " + " + ".join(updates) + ";\n")
    out.write("endmodule\n\n")
    out.write("\n".join(labels) + "\n")
    properties = f'P=? [ F ({sync}) ]\n'
    return PrismModel(out.getvalue(), properties)


def dump_model_json(dtmc: SparseDtmc) -> str:
    """Self-contained JSON dump of a model (states, labels and sorted transitions)."""
    m = dtmc.matrix
    doc = {
        "kind": dtmc.kind,
        "state_vars": list(dtmc.state_vars),
        "initial": dtmc.initial,
        "states": [list(_state_values(dtmc, s, i)) for i, s in enumerate(dtmc.states)],
        "labels": {name: np.flatnonzero(dtmc.labels[name]).tolist() for name in _label_order(dtmc)},
        "transitions": [[i, int(j), float(p)] for i in range(dtmc.n)
                        for j, p in zip(m.indices[m.indptr[i]:m.indptr[i + 1]], m.data[m.indptr[i]:m.indptr[i + 1]])],
    }
    return json.dumps(doc, indent=1) + "\n"


# -- results -----------------------------------------------------------------

RESULT_FIELDS = ("formula", "value", "residual", "iterations")


def write_results_csv(results: Iterable[dict[str, Any]], stream) -> None:
    writer = csv.DictWriter(stream, fieldnames=RESULT_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in results:
        writer.writerow(row)


def read_prop_file(path: str | Path) -> list[str]:
    props = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            props.append(line)
    return props
