"""Command-line driver: build, check, compare, table, simulate, export."""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Sequence, TextIO

from .abstraction import TOLERANCE, check_correspondence
from .analysis import PctlSyntaxError, SolverError, SolverStats, evaluate, format_result, mc_estimate, parse_pctl
from .concrete import DEFAULT_BUDGET, build_concrete_dtmc
from .dtmc import BudgetExceeded, ModelError, RewardStructure, SparseDtmc
from .io import (dump_model_json, export_explicit, export_prism_lang, load_params, load_rewards,
                 read_prop_file, write_results_csv)
from .params import ModelParams, ParamsError
from .population import build_population_dtmc
from .reduction import build_reduced_dtmc, reduced_state_count, transform_rewards

log = logging.getLogger("pcomc")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3

DEFAULT_TABLE_ROWS = ((3, 6), (5, 6), (8, 6), (3, 8), (5, 8), (8, 8), (3, 10), (5, 10), (8, 10))


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    params: ModelParams | None
    kind: str
    reduce: bool
    exact: bool
    budget: int
    seed: int
    out: str | None


@contextmanager
def _output(path: str | None) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _check_budget(params: ModelParams, kind: str, budget: int) -> None:
    """Refuse up front when even the initial layer cannot fit, naming the largest feasible N."""
    if kind != "concrete" or params.T ** params.N + 1 <= budget:
        return
    n = 1
    while params.T ** (n + 1) + 1 <= budget:
        n += 1
    raise BudgetExceeded(budget, f"concrete model (the largest N with T={params.T} whose "
                                 f"initial assignments fit is N={n})")


def build_model(cfg: RunConfig, params: ModelParams | None = None) -> SparseDtmc:
    params = params or cfg.params
    _check_budget(params, cfg.kind, cfg.budget)
    if cfg.kind == "concrete":
        if cfg.reduce:
            raise UsageError("--reduce applies to population models only")
        return build_concrete_dtmc(params, budget=cfg.budget, exact=cfg.exact)
    dtmc = build_population_dtmc(params, exact=cfg.exact)
    if dtmc.n > cfg.budget:
        raise BudgetExceeded(cfg.budget, "population model")
    return build_reduced_dtmc(dtmc, params) if cfg.reduce else dtmc


def _rewards_for(cfg: RunConfig, source: str | None) -> tuple[SparseDtmc, RewardStructure | None]:
    """Build the model together with the reward structure named by ``--rewards``.

    Rewards are always attached to the unreduced model first, then carried
    over by the reward transformation when ``--reduce`` is set.
    """
    if cfg.kind == "population" and cfg.reduce:
        full = build_population_dtmc(cfg.params, exact=cfg.exact)
        reduced = build_reduced_dtmc(full, cfg.params)
        if source is None:
            return reduced, None
        return reduced, transform_rewards(full, reduced, _load_rewards(source, full))
    dtmc = build_model(cfg)
    return dtmc, (None if source is None else _load_rewards(source, dtmc))


def _load_rewards(source: str, dtmc: SparseDtmc) -> RewardStructure:
    if source == "steps":
        return RewardStructure.steps(dtmc.n)
    return load_rewards(source, dtmc)


# -- subcommands -------------------------------------------------------------

def cmd_build(cfg: RunConfig, args: argparse.Namespace) -> int:
    dtmc = build_model(cfg)
    p = cfg.params
    fields = [f"kind={cfg.kind}", f"reduced={'yes' if cfg.reduce else 'no'}", f"N={p.N}", f"T={p.T}",
              f"states={dtmc.n}", f"transitions={dtmc.num_transitions}"]
    if cfg.exact and dtmc.exact_rows is not None:
        ok = all(sum(row.values(), Fraction(0)) == 1 for row in dtmc.exact_rows)
        fields.append(f"exact_stochastic={'true' if ok else 'false'}")
    print(" ".join(fields))
    if cfg.out:
        Path(cfg.out).write_text(dump_model_json(dtmc), encoding="utf-8", newline="\n")
    return EXIT_OK


def _collect_props(args: argparse.Namespace) -> list[str]:
    props = list(args.prop or [])
    if args.prop_file:
        props += read_prop_file(args.prop_file)
    if not props:
        raise UsageError("no properties given (use --prop or --prop-file)")
    return props


def cmd_check(cfg: RunConfig, args: argparse.Namespace) -> int:
    props = _collect_props(args)
    formulas = [parse_pctl(text) for text in props]
    dtmc, rewards = _rewards_for(cfg, args.rewards)
    results, failed = [], False
    for text, formula in zip(props, formulas):
        stats = SolverStats()
        try:
            value = evaluate(dtmc, formula, rewards, stats)
        except SolverError as exc:
            raise SolverError(f"while checking {text!r}: {exc}", exc.residual) from None
        if isinstance(value, bool) and not value:
            failed = True
        results.append({"formula": text, "value": format_result(value),
                        "residual": f"{stats.residual:.3e}", "iterations": stats.iterations})
    with _output(cfg.out) as fh:
        write_results_csv(results, fh)
    return EXIT_FAILURE if failed else EXIT_OK


def cmd_compare(cfg: RunConfig, args: argparse.Namespace) -> int:
    p = cfg.params
    _check_budget(p, "concrete", cfg.budget)
    concrete = build_concrete_dtmc(p, budget=cfg.budget)
    population = build_population_dtmc(p)
    report = check_correspondence(concrete, population, tol=args.tol)
    print(f"concrete_states={concrete.n} population_states={population.n} "
          f"sources_checked={report.sources_checked}")
    print(f"max_discrepancy={report.max_discrepancy:.3e}")
    print(f"sync_concrete={report.sync_concrete!r} sync_population={report.sync_population!r}")
    if args.verbose:
        print(report.table())
    if cfg.out:
        Path(cfg.out).write_text(report.to_json() + "\n", encoding="utf-8", newline="\n")
    return EXIT_OK if report.passed(args.tol) else EXIT_FAILURE


def _parse_rows(text: str | None) -> list[tuple[int, int]]:
    if not text:
        return list(DEFAULT_TABLE_ROWS)
    rows = []
    for item in text.split():
        n, _, t = item.partition(",")
        try:
            rows.append((int(n), int(t)))
        except ValueError:
            raise UsageError(f"bad table row {item!r}; expected N,T") from None
    return rows


TABLE_FIELDS = ("N", "T", "R", "epsilon", "mu", "states", "transitions", "reduced_states",
                "reduced_transitions", "closed_form_states", "state_reduction_pct",
                "transition_reduction_pct", "bound", "bound_holds")


def table_rows(base: ModelParams, rows: Sequence[tuple[int, int]]) -> list[dict]:
    out = []
    for n, t in rows:
        p = base.replace(N=n, T=t)
        full = build_population_dtmc(p)
        reduced = build_reduced_dtmc(full, p)
        states = full.n
        bound = full.num_transitions - 2 * math.comb(n + t - 2, n)
        out.append({
            "N": n, "T": t, "R": p.R, "epsilon": p.epsilon, "mu": p.mu,
            "states": states, "transitions": full.num_transitions,
            "reduced_states": reduced.n, "reduced_transitions": reduced.num_transitions,
            "closed_form_states": reduced_state_count(n, t),
            "state_reduction_pct": f"{100 * (1 - reduced.n / states):.2f}",
            "transition_reduction_pct": f"{100 * (1 - reduced.num_transitions / full.num_transitions):.2f}",
            "bound": bound, "bound_holds": "pass" if reduced.num_transitions <= bound else "fail",
        })
    return out


def cmd_table(cfg: RunConfig, args: argparse.Namespace) -> int:
    base = cfg.params or ModelParams(N=3, T=6, R=1, epsilon=0.1, mu=0.1)
    rows = table_rows(base, _parse_rows(args.rows))
    with _output(cfg.out) as fh:
        writer = csv.DictWriter(fh, fieldnames=TABLE_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        fh.write("# states counts the configurations C(N+T-1,N) plus the initial state; encodings that\n"
                 "# store each configuration twice (for instance with a round flag) report 2*C(N+T-1,N)+1.\n")
    return EXIT_OK if all(r["bound_holds"] == "pass" and r["reduced_states"] == r["closed_form_states"]
                          for r in rows) else EXIT_FAILURE


def cmd_simulate(cfg: RunConfig, args: argparse.Namespace) -> int:
    dtmc = build_model(cfg)
    horizon = args.horizon or 10 * cfg.params.T * cfg.params.N
    estimate, half = mc_estimate(dtmc, dtmc.label_mask(args.label), args.paths, horizon, seed=cfg.seed)
    with _output(cfg.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("label", "estimate", "half_width_95", "paths", "horizon", "seed"))
        writer.writerow((args.label, repr(estimate), repr(half), args.paths, horizon, cfg.seed))
    return EXIT_OK


def cmd_export(cfg: RunConfig, args: argparse.Namespace) -> int:
    if not cfg.out:
        raise UsageError("export needs --out PREFIX")
    if args.format == "prism":
        if cfg.reduce:
            raise UsageError("PRISM-language export covers the unreduced models only")
        model = export_prism_lang(cfg.params, cfg.kind, build_model(cfg))
        Path(f"{cfg.out}.pm").write_text(model.model, encoding="utf-8", newline="\n")
        Path(f"{cfg.out}.pctl").write_text(model.properties, encoding="utf-8", newline="\n")
        print(f"wrote {cfg.out}.pm {cfg.out}.pctl")
        return EXIT_OK
    dtmc, rewards = _rewards_for(cfg, args.rewards)
    written = export_explicit(dtmc, rewards).write(cfg.out)
    print("wrote " + " ".join(str(p) for p in written))
    return EXIT_OK


COMMANDS = {"build": cmd_build, "check": cmd_check, "compare": cmd_compare,
            "table": cmd_table, "simulate": cmd_simulate, "export": cmd_export}


# -- argument parsing --------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", help="JSON parameter file")
    common.add_argument("--kind", choices=("population", "concrete"), default="population")
    common.add_argument("--reduce", action="store_true", help="use the reduced population model")
    common.add_argument("--exact", action="store_true", help="build with rational arithmetic")
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="maximum number of states")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file (or prefix for export)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="pcomc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="build a model and print its size")

    p = sub.add_parser("check", parents=[common], help="evaluate PCTL properties")
    p.add_argument("--prop", action="append", help="property text (repeatable)")
    p.add_argument("--prop-file", help="file with one property per line; '#' starts a comment")
    p.add_argument("--rewards", help="'steps' or a JSON reward file")

    p = sub.add_parser("compare", parents=[common], help="compare concrete and population models")
    p.add_argument("--tol", type=float, default=TOLERANCE)

    p = sub.add_parser("table", parents=[common], help="state-space reduction table as CSV")
    p.add_argument("--rows", help="space separated N,T pairs")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimate of reaching a label")
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--horizon", type=int, help="path length (default 10*T*N)")
    p.add_argument("--label", default="synch")

    p = sub.add_parser("export", parents=[common], help="write PRISM explicit files or a PRISM model")
    p.add_argument("--format", choices=("explicit", "prism"), default="explicit")
    p.add_argument("--rewards", help="'steps' or a JSON reward file")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.params is None and args.command != "table":
            raise UsageError(f"{args.command} needs --params")
        params = load_params(args.params) if args.params else None
        cfg = RunConfig(args.command, params, args.kind, args.reduce, args.exact,
                        args.budget, args.seed, args.out)
        return COMMANDS[args.command](cfg, args)
    except (UsageError, ParamsError, PctlSyntaxError) as exc:
        print(f"pcomc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"pcomc {args.command}: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (SolverError, ModelError, OSError, KeyError, ValueError) as exc:
        print(f"pcomc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
