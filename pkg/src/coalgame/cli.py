"""Command-line interface.

Subcommands: equiv, distance, eval, synth, play, oracle, serve.  Every
numeric argument is an exact rational written p/q (or an integer);
decimal notation is rejected.  Exit codes: 0 success, 1 usage error,
2 invalid input, 3 refused computation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys as _sys
from fractions import Fraction

from .classical import (
    SynthesisIncomplete,
    behavioural_equivalence,
    eval_formula,
    formula_to_text,
    parse_formula,
    synthesize_formula,
)
from .games import (
    BudgetDefender,
    ClassicalFormulaSpoiler,
    ClosureDefender,
    Game,
    MetricFormulaSpoiler,
    RandomClassicalDefender,
    RandomClassicalSpoiler,
    RandomMetricDefender,
    RandomMetricSpoiler,
    Transcript,
    playout,
    solve_classical_game,
)
from .metric import (
    behavioural_distance,
    eval_metric_formula,
    lift_value,
    metric_formula_to_text,
    oracle_intervals,
    parse_metric_formula,
    synthesize_metric_formula,
)
from .model import RefusalError, System
from .parser import ParseError, parse_rational, parse_system

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_REFUSED = 3

ENV_DEFAULT_TOP = "COALGAME_DEFAULT_TOP"
ENV_DEFAULT_TOL = "COALGAME_DEFAULT_TOL"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's 2
        raise UsageError(message)


class InputError(Exception):
    pass


def _rat(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _params(args) -> dict[str, Fraction]:
    out: dict[str, Fraction] = {}
    for item in args.param or []:
        if "=" not in item:
            raise InputError(f"--param expects name=p/q, got {item!r}")
        name, _, value = item.partition("=")
        out[name.strip()] = _rat(value)
    if getattr(args, "eps", None) is not None:
        out["eps"] = _rat(args.eps)
    return out


def _load_system(args) -> System:
    path = args.file
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        sys_ = parse_system(text, params=_params(args), name=os.path.basename(path))
    except ParseError as exc:
        raise InputError(f"{path}: {exc}") from exc
    env_top = os.environ.get(ENV_DEFAULT_TOP)
    if env_top and sys_.top == 1 and not _has_real_bound(sys_):
        sys_ = System(
            expr=sys_.expr,
            states=sys_.states,
            alpha=sys_.alpha,
            top=_rat(env_top),
            name=sys_.name,
        )
    return sys_


def _has_real_bound(sys_: System) -> bool:
    from .functors import expr_tops

    return bool(expr_tops(sys_.expr))


def _emit(args, text_lines, payload, tsv_rows) -> None:
    fmt = args.format
    if fmt == "json":
        print(json.dumps(payload, indent=2))
    elif fmt == "tsv":
        for row in tsv_rows:
            print("\t".join(str(c) for c in row))
    else:
        for line in text_lines:
            print(line)


def _p2_text(p: dict) -> str:
    true = [z for z, v in sorted(p.items()) if v]
    return "{" + ",".join(true) + "}"


def _pr_text(p: dict) -> str:
    parts = [f"{z}={v}" for z, v in sorted(p.items()) if v]
    return "{" + " ".join(parts) + "}" if parts else "{}"


def _pred_json(p: dict) -> dict:
    return {z: str(v) for z, v in p.items()}


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def cmd_equiv(args) -> int:
    sys_ = _load_system(args)
    eq = behavioural_equivalence(sys_)
    blocks = [list(b) for b in eq.blocks()]
    if args.x is None:
        lines = [f"depth: {eq.depth}"] + [
            "block: " + ", ".join(b) for b in blocks
        ]
        _emit(args, lines, {"depth": eq.depth, "blocks": blocks}, [["block"] + b for b in blocks])
        return EXIT_OK
    x, y = args.x, args.y
    if x not in sys_.alpha or y not in sys_.alpha:
        missing = x if x not in sys_.alpha else y
        raise InputError(f"unknown state '{missing}'")
    equivalent = eq.equivalent(x, y)
    lines = [f"equivalent: {'yes' if equivalent else 'no'}"]
    payload = {"x": x, "y": y, "equivalent": equivalent, "depth": eq.depth}
    row = [x, y, "yes" if equivalent else "no"]
    if not equivalent:
        synth = synthesize_formula(sys_, x, y, equivalence=eq)
        lines.append(f"formula: {synth.text}")
        lines.append(f"formula depth: {synth.depth}")
        payload["formula"] = synth.text
        payload["formula_depth"] = synth.depth
        row.append(synth.text)
    _emit(args, lines, payload, [row])
    return EXIT_OK


def _distance_result(sys_, args):
    discount = _rat(args.discount) if args.discount else None
    max_iter = args.max_iter
    tol_text = args.tol or os.environ.get(ENV_DEFAULT_TOL)
    if args.tol and discount is None:
        raise UsageError("--tol requires --discount (only contraction yields error bounds)")
    if discount is not None and tol_text:
        tol = _rat(tol_text)
        if tol <= 0:
            raise InputError("tolerance must be positive")
        bound = sys_.top * discount / (1 - discount)
        k = 0
        while bound > tol and k < 100_000:
            bound *= discount
            k += 1
        max_iter = max(k, 1)
    return behavioural_distance(sys_, discount=discount, max_iterations=max_iter)


def cmd_distance(args) -> int:
    sys_ = _load_system(args)
    res = _distance_result(sys_, args)
    cert = res.certificate
    cert_line = f"certificate: {cert.kind} after {cert.iterations} iterations"
    if cert.error_bound is not None:
        cert_line += f", error at most {cert.error_bound}"
    cert_json = {
        "kind": cert.kind,
        "iterations": cert.iterations,
        "error_bound": str(cert.error_bound) if cert.error_bound is not None else None,
    }
    if args.x is not None:
        for state in (args.x, args.y):
            if state not in sys_.alpha:
                raise InputError(f"unknown state '{state}'")
        v = res.value(args.x, args.y)
        lines = [f"distance: {v}", cert_line]
        payload = {"x": args.x, "y": args.y, "distance": str(v), "certificate": cert_json}
        _emit(args, lines, payload, [[args.x, args.y, v]])
        return EXIT_OK
    lines = [f"d({x},{y}) = {v}" for x, y, v in res.table.items()]
    lines.append(cert_line)
    payload = {
        "pairs": [{"x": x, "y": y, "distance": str(v)} for x, y, v in res.table.items()],
        "certificate": cert_json,
    }
    _emit(args, lines, payload, [[x, y, v] for x, y, v in res.table.items()])
    return EXIT_OK


def cmd_eval(args) -> int:
    sys_ = _load_system(args)
    states = args.state or list(sys_.states)
    for state in states:
        if state not in sys_.alpha:
            raise InputError(f"unknown state '{state}'")
    if args.logic == "classical":
        try:
            f = parse_formula(args.formula)
        except ValueError as exc:
            raise InputError(f"bad formula: {exc}") from exc
        try:
            values = eval_formula(sys_, f)
        except KeyError as exc:
            raise InputError(str(exc)) from exc
        text = formula_to_text(f)
    else:
        try:
            f = parse_metric_formula(args.formula)
        except ValueError as exc:
            raise InputError(f"bad formula: {exc}") from exc
        try:
            values = eval_metric_formula(sys_, f)
        except KeyError as exc:
            raise InputError(str(exc)) from exc
        text = metric_formula_to_text(f)
    lines = [f"{text} @ {z} = {values[z]}" for z in states]
    payload = {"formula": text, "values": {z: str(values[z]) for z in states}}
    _emit(args, lines, payload, [[z, values[z]] for z in states])
    return EXIT_OK


def cmd_synth(args) -> int:
    sys_ = _load_system(args)
    for state in (args.x, args.y):
        if state not in sys_.alpha:
            raise InputError(f"unknown state '{state}'")
    if args.logic == "classical":
        synth = synthesize_formula(sys_, args.x, args.y)
        if synth is None:
            _emit(
                args,
                ["equivalent: yes (no distinguishing formula exists)"],
                {"equivalent": True},
                [[args.x, args.y, "equivalent"]],
            )
            return EXIT_OK
        values = eval_formula(sys_, synth.formula)
        lines = [
            f"formula: {synth.text}",
            f"depth: {synth.depth}",
            f"value at {args.x}: {values[args.x]}",
            f"value at {args.y}: {values[args.y]}",
        ]
        payload = {
            "formula": synth.text,
            "depth": synth.depth,
            "values": {args.x: values[args.x], args.y: values[args.y]},
        }
        _emit(args, lines, payload, [[synth.text, synth.depth]])
        return EXIT_OK
    synth = synthesize_metric_formula(sys_, args.x, args.y)
    if synth is None:
        _emit(
            args,
            ["distance: 0 (no separating formula exists)"],
            {"distance": "0"},
            [[args.x, args.y, "0"]],
        )
        return EXIT_OK
    lines = [
        f"formula: {synth.text}" if len(synth.text) <= args.max_text else "formula: (too large to print; use --format json)",
        f"depth: {synth.depth}",
        f"gap: {synth.gap}",
        f"distance: {synth.distance}",
        f"attained: {'yes' if synth.attained else 'no (the formula certifies a lower bound)'}",
    ]
    payload = {
        "formula": synth.text,
        "depth": synth.depth,
        "gap": str(synth.gap),
        "distance": str(synth.distance),
        "attained": synth.attained,
    }
    _emit(args, lines, payload, [[args.x, args.y, synth.gap, synth.distance]])
    return EXIT_OK


def _transcript_lines(t: Transcript, kind: str) -> list[str]:
    lines = []
    for ev in t.events:
        move = ev.move
        name = type(move).__name__
        if name == "Step1":
            pred = _p2_text(move.p1) if kind == "classical" else _pr_text(move.p1)
            desc = f"s={move.s} p1={pred}"
        elif name == "Step2":
            pred = _p2_text(move.p2) if kind == "classical" else _pr_text(move.p2)
            desc = f"p2={pred}"
        elif name == "Step3":
            desc = f"challenges p{move.pick} at {move.state}"
        elif name == "Step4":
            desc = f"answers {move.state}"
        else:
            desc = f"{move.by} concedes"
        lines.append(f"round {ev.round} {ev.phase} {ev.by}: {desc}")
    lines.append(f"winner: {t.winner} ({t.reason})")
    return lines


def _transcript_json(t: Transcript) -> dict:
    events = []
    for ev in t.events:
        move = ev.move
        name = type(move).__name__
        entry: dict = {"round": ev.round, "phase": ev.phase, "by": ev.by, "type": name.lower()}
        if name == "Step1":
            entry["s"] = move.s
            entry["p1"] = _pred_json(move.p1)
        elif name == "Step2":
            entry["p2"] = _pred_json(move.p2)
        elif name == "Step3":
            entry["pick"] = move.pick
            entry["state"] = move.state
        elif name == "Step4":
            entry["state"] = move.state
        events.append(entry)
    return {"winner": t.winner, "reason": t.reason, "rounds": t.rounds, "events": events}


def cmd_play(args) -> int:
    sys_ = _load_system(args)
    for state in (args.x, args.y):
        if state not in sys_.alpha:
            raise InputError(f"unknown state '{state}'")
    if args.solve:
        if args.kind != "classical":
            raise UsageError("--solve applies to the classical game only")
        sol = solve_classical_game(sys_, args.x, args.y, mode=args.mode, bound=args.solve_bound)
        lines = [f"winner: {sol.winner} (exact solution)"]
        _emit(args, lines, {"winner": sol.winner, "exact": True}, [[sol.winner]])
        return EXIT_OK
    budget = _rat(args.budget) if args.budget is not None else None
    if args.kind == "metric" and budget is None:
        raise UsageError("the quantitative game needs --budget p/q")
    game = Game(sys_, args.kind, args.x, args.y, eps=budget, mode=args.mode)
    if args.kind == "classical":
        if args.spoiler == "formula":
            eq = behavioural_equivalence(sys_)
            if eq.equivalent(args.x, args.y):
                spoiler = RandomClassicalSpoiler(sys_, args.seed)
            else:
                spoiler = ClassicalFormulaSpoiler(sys_, args.x, args.y)
        else:
            spoiler = RandomClassicalSpoiler(sys_, args.seed)
        defender = (
            ClosureDefender(sys_)
            if args.defender == "engine"
            else RandomClassicalDefender(sys_, args.seed + 1)
        )
    else:
        dist = behavioural_distance(sys_)
        if args.spoiler == "formula" and dist.value(args.x, args.y) > 0:
            spoiler = MetricFormulaSpoiler(sys_, args.x, args.y, distance=dist)
        else:
            spoiler = RandomMetricSpoiler(sys_, args.seed)
        defender = (
            BudgetDefender(sys_, distance=dist)
            if args.defender == "engine"
            else RandomMetricDefender(sys_, args.seed + 1)
        )
    transcript = playout(game, spoiler, defender, max_rounds=args.rounds)
    _emit(
        args,
        _transcript_lines(transcript, args.kind),
        _transcript_json(transcript),
        [[transcript.winner, transcript.reason, transcript.rounds]],
    )
    return EXIT_OK


def cmd_oracle(args) -> int:
    sys_ = _load_system(args)
    res = _distance_result(sys_, args)
    d = res.table
    intervals = oracle_intervals(sys_, d.get, grid_steps=args.grid)
    ok_all = True
    lines = []
    rows = []
    payload_rows = []
    for (x, y), interval in intervals.items():
        value = lift_value(sys_.expr, sys_.top, d.get, sys_.alpha[x], sys_.alpha[y])
        ok = interval.contains(value)
        ok_all = ok_all and ok
        lines.append(
            f"{x},{y}: {interval.lower} <= {value} <= {interval.upper} {'ok' if ok else 'VIOLATION'}"
        )
        rows.append([x, y, interval.lower, value, interval.upper, "ok" if ok else "violation"])
        payload_rows.append(
            {
                "x": x,
                "y": y,
                "lower": str(interval.lower),
                "value": str(value),
                "upper": str(interval.upper),
                "ok": ok,
            }
        )
    lines.append(f"oracle: {'all ok' if ok_all else 'VIOLATIONS found'}")
    _emit(args, lines, {"ok": ok_all, "pairs": payload_rows}, rows)
    return EXIT_OK if ok_all else EXIT_INPUT


def cmd_serve(args) -> int:
    from .service import run_server

    run_server(host=args.host, port=args.port, frontend=args.frontend)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument wiring
# ---------------------------------------------------------------------------


def _add_file_options(p) -> None:
    p.add_argument("file", help="system description file")
    p.add_argument("--param", action="append", metavar="NAME=P/Q", help="bind a declared parameter")
    p.add_argument("--eps", metavar="P/Q", help="shorthand for --param eps=P/Q")
    p.add_argument(
        "--format", choices=("text", "json", "tsv"), default="text", help="output format"
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="coalgame", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("equiv", help="behavioural equivalence and partitions")
    _add_file_options(p)
    p.add_argument("x", nargs="?", default=None)
    p.add_argument("y", nargs="?", default=None)

    p = sub.add_parser("distance", help="behavioural distance table")
    _add_file_options(p)
    p.add_argument("x", nargs="?", default=None)
    p.add_argument("y", nargs="?", default=None)
    p.add_argument("--discount", metavar="P/Q", help="contraction factor in (0,1)")
    p.add_argument("--max-iter", type=int, default=100, dest="max_iter")
    p.add_argument("--tol", metavar="P/Q", help="iterate until the error bound drops below this")

    p = sub.add_parser("eval", help="evaluate a formula at states")
    _add_file_options(p)
    p.add_argument("--formula", required=True)
    p.add_argument("--logic", choices=("classical", "metric"), default="classical")
    p.add_argument("--state", action="append", help="restrict output to these states")

    p = sub.add_parser("synth", help="synthesize a distinguishing formula")
    _add_file_options(p)
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--logic", choices=("classical", "metric"), default="classical")
    p.add_argument("--max-text", type=int, default=10_000, dest="max_text")

    p = sub.add_parser("play", help="run a refutation game")
    _add_file_options(p)
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--kind", choices=("classical", "metric"), default="classical")
    p.add_argument("--budget", metavar="P/Q", help="distance budget of the quantitative game")
    p.add_argument("--mode", choices=("perlam", "lifted"), default="perlam")
    p.add_argument("--spoiler", choices=("formula", "random"), default="formula")
    p.add_argument("--defender", choices=("engine", "random"), default="engine")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rounds", type=int, default=50)
    p.add_argument("--solve", action="store_true", help="solve the classical game exactly")
    p.add_argument("--solve-bound", type=int, default=5, dest="solve_bound")

    p = sub.add_parser("oracle", help="independent interval check of the lifting")
    _add_file_options(p)
    p.add_argument("--grid", type=int, default=8)
    p.add_argument("--discount", metavar="P/Q")
    p.add_argument("--max-iter", type=int, default=100, dest="max_iter")
    p.add_argument("--tol", metavar="P/Q")

    p = sub.add_parser("serve", help="run the HTTP game service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--frontend", default=None, help="directory of static web client files")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command in ("equiv", "distance"):
            if (args.x is None) != (args.y is None):
                raise UsageError("give both states or neither")
        handler = {
            "equiv": cmd_equiv,
            "distance": cmd_distance,
            "eval": cmd_eval,
            "synth": cmd_synth,
            "play": cmd_play,
            "oracle": cmd_oracle,
            "serve": cmd_serve,
        }[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=_sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INPUT
    except (ParseError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INPUT
    except (RefusalError, SynthesisIncomplete) as exc:
        print(f"refused: {exc}", file=_sys.stderr)
        return EXIT_REFUSED


if __name__ == "__main__":
    raise SystemExit(main())
