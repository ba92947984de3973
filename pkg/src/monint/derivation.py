"""Typing derivations, a rule-by-rule checker, and the JSON fixture format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from .monad import (BOTTOM, MonadicElement, MonadSpec, MonadError, check_discipline, eta, leq,
                    parse_monad, scale, union)
from .syntax import App, Lam, Op, ParseError, Term, Var, parse, pretty
from .types import (EMPTY, Arrow, Intersection, TypeSyntaxError, UncoveredSupport, format_type,
                    parse_arrow, parse_intersection, parse_monadic, type_bind, type_op)

FINITARY, INFINITARY = "finitary", "infinitary"
RULES = ("var", "int", "abs", "app", "unit", "op", "bot")
VALUE_RULES = ("var", "abs")
MONADIC_RULES = ("unit", "op", "app", "bot")

FIXTURE_DIR = Path(__file__).with_name("fixtures")


class CheckError(Exception):
    def __init__(self, path: str, message: str):
        self.path = path or "/"
        self.message = message
        super().__init__(f"{self.path}: {message}")


class DerivationFormatError(ValueError):
    def __init__(self, pointer: str, message: str):
        self.pointer = pointer or "/"
        super().__init__(f"{self.pointer}: {message}")


Env = Mapping[str, Intersection]


def normalize_env(env: Env) -> dict[str, Intersection]:
    return {x: i for x, i in sorted(env.items()) if len(i)}


def env_get(env: Env, x: str) -> Intersection:
    return env.get(x, EMPTY)


def env_extend(env: Env, x: str, i: Intersection) -> dict[str, Intersection]:
    out = dict(env)
    out[x] = i
    return normalize_env(out)


def format_env(env: Env) -> str:
    return ", ".join(f"{x}:{i}" for x, i in sorted(env.items()))


@dataclass(frozen=True, eq=False)
class Derivation:
    rule: str
    env: dict
    subject: Term
    type: Any
    premises: tuple["Derivation", ...] = ()
    table: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "env", normalize_env(self.env))
        object.__setattr__(self, "premises", tuple(self.premises))

    def nodes(self):
        stack = [self]
        seen = set()
        while stack:
            d = stack.pop()
            if id(d) in seen:
                continue
            seen.add(id(d))
            yield d
            stack.extend(d.premises)

    def has_bot(self) -> bool:
        cached = self.__dict__.get("_has_bot")
        if cached is None:
            cached = self.rule == "bot" or any(p.has_bot() for p in self.premises)
            object.__setattr__(self, "_has_bot", cached)
        return cached


@dataclass(frozen=True, eq=False)
class MonadicDerivation:
    rule: str
    subject: MonadicElement
    type: MonadicElement
    premises: tuple[Derivation, ...] = ()


# ---------------------------------------------------------------- node builders

def var_node(env: Env, x: str, a: Arrow) -> Derivation:
    return Derivation("var", env, Var(x), a)


def int_node(env: Env, v: Term, premises) -> Derivation:
    premises = tuple(premises)
    return Derivation("int", env, v, Intersection(tuple(p.type for p in premises)), premises)


def abs_node(env: Env, lam: Lam, domain: Intersection, premise: Derivation) -> Derivation:
    return Derivation("abs", env, lam, Arrow(domain, premise.type), (premise,))


def unit_node(spec: MonadSpec, env: Env, premise: Derivation) -> Derivation:
    return Derivation("unit", env, premise.subject, eta(spec, premise.type), (premise,))


def op_node(spec: MonadSpec, env: Env, t: Op, premises) -> Derivation:
    premises = tuple(premises)
    return Derivation("op", env, t, type_op(spec, t.name, [p.type for p in premises], t.param), premises)


def app_node(env: Env, t: App, value_premises, comp: Derivation) -> Derivation:
    value_premises = tuple(sorted(value_premises, key=lambda p: p.type.domain.sort_key))
    table = {p.type.domain: p.type.codomain for p in value_premises}
    return Derivation("app", env, t, type_bind(comp.type, table), value_premises + (comp,), table)


def bot_node(env: Env, t: Term) -> Derivation:
    return Derivation("bot", env, t, BOTTOM)


def empty_value_node(spec: MonadSpec, env: Env, v: Term) -> Derivation:
    """``v : eta(0)`` through an empty intersection."""
    return unit_node(spec, env, int_node(env, v, ()))


# ---------------------------------------------------------------- checking

@dataclass(frozen=True)
class Verdict:
    ok: bool
    path: str = ""
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        return "ok" if self.ok else f"rejected at {self.path}: {self.reason}"


def check(d: Derivation, spec: MonadSpec, mode: str = FINITARY) -> Verdict:
    try:
        _Checker(spec, mode).node(d, "")
    except CheckError as exc:
        return Verdict(False, exc.path, exc.message)
    return Verdict(True)


def check_monadic(md: MonadicDerivation, spec: MonadSpec, target: MonadicElement,
                  mode: str = FINITARY) -> Verdict:
    """Assemble the type of a monadic subject from its per-branch premises and compare with ``target``.

    Finitary mode demands equality; infinitary mode accepts any assembly above the target.
    """
    checker = _Checker(spec, mode)
    try:
        branches = md.subject.branches
        if md.rule == "ext-unit":
            if len(branches) != 1 or branches[0].weight != 1 or branches[0].grade != spec.unit_grade:
                raise CheckError("/", "ext-unit needs a subject of the form eta(t)")
        elif md.rule != "ext-g":
            raise CheckError("/", f"unknown monadic rule {md.rule!r}")
        if len(md.premises) != len(branches):
            raise CheckError("/", f"{len(branches)} branch(es) but {len(md.premises)} premise(s)")
        parts = []
        for k, (b, p) in enumerate(zip(branches, md.premises)):
            path = f"/premises/{k}"
            if p.subject != b.payload:
                raise CheckError(path, f"premise subject {pretty(p.subject)} does not match branch {pretty(b.payload)}")
            if p.env:
                raise CheckError(path, "monadic premises must be closed judgments")
            checker.monadic_kind(p, path)
            checker.node(p, path)
            parts.append(scale(p.type, b.weight, b.grade))
        assembled = union(parts)
        if md.type != assembled:
            raise CheckError("/", f"assigned {format_type(md.type)} but premises assemble {format_type(assembled)}")
        if mode == FINITARY and assembled != target:
            raise CheckError("/", f"assembled {format_type(assembled)} differs from {format_type(target)}")
        if mode == INFINITARY and not leq(target, assembled):
            raise CheckError("/", f"{format_type(target)} is not below {format_type(assembled)}")
    except CheckError as exc:
        return Verdict(False, exc.path, exc.message)
    return Verdict(True)


class _Checker:
    def __init__(self, spec: MonadSpec, mode: str):
        if mode not in (FINITARY, INFINITARY):
            raise ValueError(f"unknown mode {mode!r}")
        self.spec = spec
        self.mode = mode
        self.done: set[int] = set()
        self.wf: set[str] = set()

    def fail(self, path: str, message: str):
        raise CheckError(path, message)

    def well_formed(self, g, path: str):
        key = format_type(g) if isinstance(g, MonadicElement) else g.sort_key
        if key in self.wf:
            return
        if isinstance(g, MonadicElement):
            try:
                check_discipline(self.spec, g)
            except MonadError as exc:
                self.fail(path, f"ill-formed monadic type {key}: {exc}")
            for b in g.branches:
                if not isinstance(b.payload, Intersection):
                    self.fail(path, f"monadic type payload is not an intersection: {b.payload!r}")
                self.well_formed(b.payload, path)
        elif isinstance(g, Intersection):
            for a in g.members:
                self.well_formed(a, path)
        elif isinstance(g, Arrow):
            self.well_formed(g.domain, path)
            self.well_formed(g.codomain, path)
        else:
            self.fail(path, f"not a type: {g!r}")
        self.wf.add(key)

    def monadic_kind(self, d: Derivation, path: str):
        if d.rule not in MONADIC_RULES or not isinstance(d.type, MonadicElement):
            self.fail(path, f"expected a monadic judgment, found rule {d.rule}")

    def value_kind(self, d: Derivation, path: str):
        if d.rule not in VALUE_RULES or not isinstance(d.type, Arrow):
            self.fail(path, f"expected a value-type judgment, found rule {d.rule}")

    def same_env(self, parent: Derivation, d: Derivation, path: str, expected=None):
        want = parent.env if expected is None else expected
        if d.env != want:
            self.fail(path, f"environment [{format_env(d.env)}] should be [{format_env(want)}]")

    def node(self, d: Derivation, path: str):
        if id(d) in self.done:
            return
        here = path or "/"
        rule = d.rule
        if rule not in RULES:
            self.fail(here, f"unknown rule {rule!r}")
        self.well_formed(d.type, here)
        getattr(self, "rule_" + rule)(d, path, here)
        for k, p in enumerate(d.premises):
            self.node(p, f"{path}/premises/{k}")
        self.done.add(id(d))

    def rule_var(self, d, path, here):
        if not isinstance(d.subject, Var):
            self.fail(here, "var needs a variable subject")
        if d.premises:
            self.fail(here, "var has no premises")
        if not isinstance(d.type, Arrow):
            self.fail(here, "var assigns an arrow type")
        if d.type not in env_get(d.env, d.subject.name):
            self.fail(here, f"{d.type} is not a member of {d.subject.name}:{env_get(d.env, d.subject.name)}")

    def rule_int(self, d, path, here):
        if not d.subject.is_value:
            self.fail(here, "int needs a value subject")
        if not isinstance(d.type, Intersection):
            self.fail(here, "int assigns an intersection")
        for k, p in enumerate(d.premises):
            sub = f"{path}/premises/{k}"
            self.value_kind(p, sub)
            self.same_env(d, p, sub)
            if p.subject != d.subject:
                self.fail(sub, "int premises must type the same value")
        got = {p.type for p in d.premises}
        want = set(d.type.members)
        if got != want:
            missing = ", ".join(str(a) for a in want - got) or "none"
            extra = ", ".join(str(a) for a in got - want) or "none"
            self.fail(here, f"premises do not cover {d.type} exactly (missing: {missing}; extra: {extra})")

    def rule_abs(self, d, path, here):
        if not isinstance(d.subject, Lam):
            self.fail(here, "abs needs a lambda subject")
        if not isinstance(d.type, Arrow):
            self.fail(here, "abs assigns an arrow type")
        if len(d.premises) != 1:
            self.fail(here, "abs has exactly one premise")
        p, sub = d.premises[0], f"{path}/premises/0"
        self.monadic_kind(p, sub)
        self.same_env(d, p, sub, env_extend(d.env, d.subject.binder, d.type.domain))
        if p.subject != d.subject.body:
            self.fail(sub, "abs premise must type the body")
        if p.type != d.type.codomain:
            self.fail(here, f"codomain {format_type(d.type.codomain)} differs from body type {format_type(p.type)}")

    def rule_unit(self, d, path, here):
        if not d.subject.is_value:
            self.fail(here, "unit needs a value subject")
        if len(d.premises) != 1 or d.premises[0].rule != "int":
            self.fail(here, "unit has exactly one int premise")
        p, sub = d.premises[0], f"{path}/premises/0"
        self.same_env(d, p, sub)
        if p.subject != d.subject:
            self.fail(sub, "unit premise must type the same value")
        want = eta(self.spec, p.type)
        if d.type != want:
            self.fail(here, f"expected {format_type(want)}, found {format_type(d.type)}")

    def rule_op(self, d, path, here):
        t = d.subject
        if not isinstance(t, Op):
            self.fail(here, "op needs an operation subject")
        if len(d.premises) != len(t.args):
            self.fail(here, f"{t.name} has {len(t.args)} argument(s) but {len(d.premises)} premise(s)")
        for k, (p, a) in enumerate(zip(d.premises, t.args)):
            sub = f"{path}/premises/{k}"
            self.monadic_kind(p, sub)
            self.same_env(d, p, sub)
            if p.subject != a:
                self.fail(sub, f"premise should type argument {k}")
        try:
            want = type_op(self.spec, t.name, [p.type for p in d.premises], t.param)
        except MonadError as exc:
            self.fail(here, str(exc))
        if d.type != want:
            self.fail(here, f"expected {format_type(want)}, found {format_type(d.type)}")

    def rule_app(self, d, path, here):
        t = d.subject
        if not isinstance(t, App):
            self.fail(here, "app needs an application subject")
        if not d.premises:
            self.fail(here, "app needs a premise for the argument")
        if d.table is None:
            self.fail(here, "app node carries no table")
        *values, comp = d.premises
        seen: dict[Intersection, Any] = {}
        for k, p in enumerate(values):
            sub = f"{path}/premises/{k}"
            self.value_kind(p, sub)
            self.same_env(d, p, sub)
            if p.subject != t.fun:
                self.fail(sub, "app value premises must type the function")
            dom, cod = p.type.domain, p.type.codomain
            if dom in seen and seen[dom] != cod:
                self.fail(sub, f"two arrows for domain {dom}")
            seen[dom] = cod
            if d.table.get(dom) != cod:
                self.fail(here, f"table entry for {dom} disagrees with premise {k}")
        for key in d.table:
            if key not in seen:
                self.fail(here, f"table key {key} has no value premise")
        sub = f"{path}/premises/{len(values)}"
        self.monadic_kind(comp, sub)
        self.same_env(d, comp, sub)
        if comp.subject != t.arg:
            self.fail(sub, "last app premise must type the argument")
        try:
            want = type_bind(comp.type, d.table)
        except UncoveredSupport as exc:
            self.fail(here, f"support not covered: missing table key {exc.missing}")
        if d.type != want:
            self.fail(here, f"expected {format_type(want)}, found {format_type(d.type)}")

    def rule_bot(self, d, path, here):
        if self.mode != INFINITARY:
            self.fail(here, "rule bot is only available in infinitary mode")
        if d.premises:
            self.fail(here, "bot has no premises")
        if d.type != BOTTOM:
            self.fail(here, "bot assigns the empty monadic type")


# ---------------------------------------------------------------- JSON

_NODE_SCHEMA = {
    "type": "object",
    "required": ["rule", "env", "subject", "type", "premises"],
    "additionalProperties": False,
    "properties": {
        "rule": {"enum": list(RULES)},
        "env": {"type": "object", "additionalProperties": {"type": "string"}},
        "subject": {"type": "string"},
        "type": {"type": "string"},
        "table": {"type": "object", "additionalProperties": {"type": "string"}},
        "premises": {"type": "array", "items": {"$ref": "#/$defs/node"}},
    },
}
SCHEMA = {"$defs": {"node": _NODE_SCHEMA}, "$ref": "#/$defs/node"}
_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def serialize(d: Derivation) -> dict:
    out = {
        "rule": d.rule,
        "env": {x: str(i) for x, i in d.env.items()},
        "subject": pretty(d.subject),
        "type": format_type(d.type),
    }
    if d.table is not None:
        out["table"] = {str(k): format_type(v) for k, v in d.table.items()}
    out["premises"] = [serialize(p) for p in d.premises]
    return out


def _pointer(parts) -> str:
    return "/" + "/".join(str(p) for p in parts) if parts else "/"


def parse_derivation(data: Any, spec: MonadSpec | None = None) -> Derivation:
    """Build a derivation from its JSON form, reporting problems with a JSON pointer."""
    if isinstance(data, str):
        data = json.loads(data)
    errors = sorted(_VALIDATOR.iter_errors(data), key=lambda e: len(e.absolute_path), reverse=True)
    if errors:
        err = errors[0]
        raise DerivationFormatError(_pointer(err.absolute_path), err.message)
    return _build(data, spec, [])


def _build(node: dict, spec: MonadSpec | None, at: list) -> Derivation:
    def fail(field_name: str, exc: Exception):
        raise DerivationFormatError(_pointer(at + [field_name]), str(exc)) from exc

    rule = node["rule"]
    try:
        subject = parse(node["subject"], closed=False, allow_reserved=True)
    except (ParseError, ValueError) as exc:
        fail("subject", exc)
    env = {}
    for x, text in node["env"].items():
        try:
            env[x] = parse_intersection(text, spec)
        except TypeSyntaxError as exc:
            fail("env", exc)
    try:
        if rule in VALUE_RULES:
            typ = parse_arrow(node["type"], spec)
        elif rule == "int":
            typ = parse_intersection(node["type"], spec)
        else:
            typ = parse_monadic(node["type"], spec)
    except (TypeSyntaxError, ValueError) as exc:
        fail("type", exc)
    table = None
    if "table" in node:
        table = {}
        for k, v in node["table"].items():
            try:
                table[parse_intersection(k, spec)] = parse_monadic(v, spec)
            except (TypeSyntaxError, ValueError) as exc:
                fail("table", exc)
    premises = [_build(p, spec, at + ["premises", k]) for k, p in enumerate(node["premises"])]
    return Derivation(rule, env, subject, typ, tuple(premises), table)


@dataclass
class Fixture:
    name: str
    spec: MonadSpec
    mode: str
    derivation: Derivation
    description: str = ""
    expect: str = "accept"
    meta: dict = field(default_factory=dict)


def load_fixture(path: str | Path) -> Fixture:
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    if "derivation" not in data:
        raise DerivationFormatError("/", "fixture files wrap the tree under 'derivation'")
    spec = parse_monad(data.get("monad", "pure"))
    d = parse_derivation(data["derivation"], spec)
    return Fixture(path.stem, spec, data.get("mode", FINITARY), d, data.get("description", ""),
                   data.get("expect", "accept"), data)


def bundled_fixtures() -> list[Path]:
    return sorted(FIXTURE_DIR.glob("*.json"))


def render(d: Derivation, indent: int = 0) -> str:
    """Indented text rendering, conclusion first."""
    env = format_env(d.env)
    line = f"{'  ' * indent}[{d.rule}] {env + ' ' if env else ''}|- {pretty(d.subject)} : {format_type(d.type)}"
    lines = [line]
    if d.table is not None and len(d.table) > 1:
        lines.append(f"{'  ' * indent}  table: " + "; ".join(f"{k} => {format_type(v)}" for k, v in d.table.items()))
    for p in d.premises:
        lines.append(render(p, indent + 1))
    return "\n".join(lines)
