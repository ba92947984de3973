"""Command-line front end: ``monint {eval,observe,trace,infer,check,examples}``.

Exit status is 0 on success, 1 when a derivation is rejected or a term cannot be
typed, and 2 on usage or parse errors.  Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .derivation import (FINITARY, INFINITARY, FIXTURE_DIR, DerivationFormatError, check, load_fixture,
                         parse_derivation, render, serialize)
from .inference import InferenceError, infer
from .monad import MonadError, element_to_json, format_branch, format_element, grade_to_json, parse_monad
from .semantics import SemanticsError, keep_values, observed_chain, run
from .syntax import OpenTermError, ParseError, parse, pretty
from .types import format_type

OK, DOMAIN_ERROR, USAGE_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def _fraction(w) -> str:
    return f"{w.numerator}/{w.denominator}"


def _read_term(arg: str) -> str:
    if arg.startswith("@"):
        try:
            return Path(arg[1:]).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read {arg[1:]}: {exc.strerror}") from None
    return arg


def _setup(args):
    try:
        spec = parse_monad(args.monad)
    except MonadError as exc:
        raise UsageError(str(exc)) from None
    if args.fuel < 0:
        raise UsageError("--fuel must be non-negative")
    term = parse(_read_term(args.term)) if hasattr(args, "term") else None
    return spec, term


def _emit(args, text: str, data) -> None:
    if args.format == "json":
        print(json.dumps(data, indent=2, ensure_ascii=False))
    else:
        print(text)


def cmd_eval(args) -> int:
    spec, t = _setup(args)
    trace = run(spec, t, args.fuel)
    if trace.converged:
        text = format_element(trace.final)
        data = {"converged": True, "steps": trace.steps, "result": element_to_json(trace.final, pretty)}
    else:
        partial = keep_values(spec, trace.final)
        text = f"no value within fuel {args.fuel}; values so far: {format_element(partial)}"
        data = {"converged": False, "steps": trace.steps, "result": element_to_json(partial, pretty)}
    _emit(args, text, data)
    return OK


def cmd_observe(args) -> int:
    spec, t = _setup(args)
    chain = observed_chain(spec, t, args.fuel)
    lines = [f"n={k}: {format_element(o)}" for k, o in enumerate(chain.observations)]
    lines.append(chain.status)
    data = {"chain": [element_to_json(o) for o in chain.observations],
            "stabilized": chain.stabilized, "stable_from": chain.stable_from}
    _emit(args, "\n".join(lines), data)
    return OK


def cmd_trace(args) -> int:
    spec, t = _setup(args)
    trace = run(spec, t, args.fuel)
    layers, lines = [], []
    for i, layer in enumerate(trace.layers):
        rows = []
        lines.append(f"layer {i}:")
        for b, result in layer.rows():
            rows.append({"source": pretty(b.payload), "weight": _fraction(b.weight),
                         "grade": grade_to_json(b.grade), "result": element_to_json(result, pretty)})
            lines.append(f"  {format_branch(b)}  ~>  {format_element(result)}")
        layers.append(rows)
    lines.append(f"final: {format_element(trace.final)}")
    _emit(args, "\n".join(lines), layers)
    return OK


def cmd_infer(args) -> int:
    spec, t = _setup(args)
    try:
        r = infer(spec, t, args.fuel, args.mode or FINITARY)
    except InferenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DOMAIN_ERROR
    data = {"type": format_type(r.type), "obs": format_element(r.obs), "derivation": serialize(r.derivation),
            "fuel_used": r.fuel_used, "mode": r.mode, "stabilized": r.stabilized}
    text = "\n".join([f"type: {data['type']}", f"obs: {data['obs']}", f"mode: {r.mode}",
                      f"fuel used: {r.fuel_used}", f"stabilized: {str(r.stabilized).lower()}",
                      render(r.derivation)])
    _emit(args, text, data)
    return OK


def _resolve_fixture(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    bundled = FIXTURE_DIR / path.name
    if bundled.exists():
        return bundled
    raise UsageError(f"no such derivation file: {name}")


def cmd_check(args) -> int:
    path = _resolve_fixture(args.file)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from None
    if isinstance(data, dict) and "derivation" in data:
        fixture = load_fixture(path)
        spec, d, mode = fixture.spec, fixture.derivation, fixture.mode
    else:
        spec = parse_monad(args.monad)
        d, mode = parse_derivation(data, spec), FINITARY
    mode = args.mode or mode
    verdict = check(d, spec, mode)
    if args.format == "json":
        print(json.dumps({"ok": verdict.ok, "path": verdict.path, "reason": verdict.reason,
                          "monad": spec.name, "mode": mode}))
    elif verdict:
        print(f"ok: {path.name} ({spec.name}, {mode})")
    if not verdict:
        print(f"{path.name}: {verdict}", file=sys.stderr)
        return DOMAIN_ERROR
    return OK


def run_examples() -> list[dict]:
    """Check every bundled figure fixture and re-infer its term."""
    rows = []
    for path in sorted(FIXTURE_DIR.glob("fig*.json")):
        start = time.perf_counter()
        fixture = load_fixture(path)
        meta = fixture.meta
        verdict = check(fixture.derivation, fixture.spec, fixture.mode)
        try:
            r = infer(fixture.spec, parse(meta["term"]), meta["fuel"], fixture.mode)
            obs = format_element(r.obs)
        except InferenceError as exc:
            obs = f"error: {exc}"
        rows.append({"fixture": path.stem, "monad": fixture.spec.name, "mode": fixture.mode,
                     "checks": verdict.ok, "obs": obs, "expected": meta["obs"],
                     "ok": verdict.ok and obs == meta["obs"],
                     "seconds": round(time.perf_counter() - start, 4)})
    return rows


def cmd_examples(args) -> int:
    rows = run_examples()
    if args.format == "json":
        print(json.dumps(rows, indent=2, ensure_ascii=False))
    else:
        print(f"{'fixture':8} {'monad':16} {'mode':11} {'checks':7} {'obs':24} result")
        for r in rows:
            print(f"{r['fixture']:8} {r['monad']:16} {r['mode']:11} {str(r['checks']).lower():7} "
                  f"{r['obs']:24} {'pass' if r['ok'] else 'FAIL (expected ' + r['expected'] + ')'}")
    return OK if all(r["ok"] for r in rows) else DOMAIN_ERROR


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--monad", default="pure", help="pure, cost, multidist, multiset, cost*multidist, "
                                                        "writer:<alphabet> or writer:<alphabet>*multidist")
    common.add_argument("--fuel", type=int, default=50, help="maximum number of reduction steps (default 50)")
    common.add_argument("--mode", choices=[FINITARY, INFINITARY], default=None,
                        help="typing mode (default finitary; for check, the fixture's own mode)")
    common.add_argument("--format", choices=["text", "json"], default="text")

    parser = argparse.ArgumentParser(prog="monint", description="Effectful call-by-value lambda calculus "
                                     "with monadic intersection types.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [("eval", "run a term to a value-only result"),
                           ("observe", "print the chain of bounded observations"),
                           ("trace", "dump the reduction trace with per-term provenance"),
                           ("infer", "infer a type derivation by evaluation")]:
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("term", help="term text, or @file to read it from a file")
    p = sub.add_parser("check", parents=[common], help="check a derivation or fixture JSON file")
    p.add_argument("file", help="path, or the name of a bundled fixture such as fixtures/fig1.json")
    sub.add_parser("examples", parents=[common], help="check and re-infer the bundled figure fixtures")
    return parser


COMMANDS = {"eval": cmd_eval, "observe": cmd_observe, "trace": cmd_trace, "infer": cmd_infer,
            "check": cmd_check, "examples": cmd_examples}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code else OK
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ParseError, OpenTermError, DerivationFormatError, MonadError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except SemanticsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DOMAIN_ERROR


if __name__ == "__main__":
    sys.exit(main())
