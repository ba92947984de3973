"""Kernel call-by-value terms: parsing, printing, substitution and evaluation contexts.

Applications are kept in kernel form: the function part of every ``App`` is a
value.  General applications written in source text are desugared by the parser
into ``(\\%fN. %fN u) t`` with a fresh reserved name.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterator

RESERVED_PREFIX = "%"


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class OpenTermError(ValueError):
    pass


class Term:
    """Base class for terms; subclasses are frozen dataclasses with cached hashes."""

    __slots__ = ()

    @property
    def is_value(self) -> bool:
        return False

    @cached_property
    def sort_key(self) -> str:
        return pretty(self)

    @cached_property
    def free_vars(self) -> frozenset[str]:
        return _free_vars(self)

    @property
    def closed(self) -> bool:
        return not self.free_vars

    def __str__(self) -> str:
        return pretty(self)


def _cached_hash(self) -> int:
    h = self.__dict__.get("_h")
    if h is None:
        h = hash((type(self).__name__,) + tuple(getattr(self, f) for f in self._fields))
        self.__dict__["_h"] = h
    return h


@dataclass(frozen=True, eq=True)
class Var(Term):
    name: str
    _fields = ("name",)
    __hash__ = _cached_hash

    @property
    def is_value(self) -> bool:
        return True


@dataclass(frozen=True, eq=True)
class Lam(Term):
    binder: str
    body: Term
    _fields = ("binder", "body")
    __hash__ = _cached_hash

    @property
    def is_value(self) -> bool:
        return True


@dataclass(frozen=True, eq=True)
class App(Term):
    fun: Term
    arg: Term
    _fields = ("fun", "arg")
    __hash__ = _cached_hash

    def __post_init__(self):
        if not self.fun.is_value:
            raise ValueError("kernel application requires a value in function position")


@dataclass(frozen=True, eq=True)
class Op(Term):
    """An operation node.  ``param`` carries the word of ``out`` or the weight of ``choice``."""

    name: str
    args: tuple[Term, ...]
    param: object = None
    _fields = ("name", "args", "param")
    __hash__ = _cached_hash


IDENTITY = Lam("z", Var("z"))
_DELTA = Lam("x", App(Var("x"), Var("x")))
OMEGA = App(_DELTA, _DELTA)
BUILTINS = {"I": IDENTITY, "omega": OMEGA}


def _free_vars(t: Term) -> frozenset[str]:
    match t:
        case Var(name):
            return frozenset((name,))
        case Lam(binder, body):
            return body.free_vars - {binder}
        case App(fun, arg):
            return fun.free_vars | arg.free_vars
        case Op(_, args, _):
            out: frozenset[str] = frozenset()
            for a in args:
                out |= a.free_vars
            return out
    raise TypeError(f"not a term: {t!r}")


def all_names(t: Term) -> set[str]:
    match t:
        case Var(name):
            return {name}
        case Lam(binder, body):
            return {binder} | all_names(body)
        case App(fun, arg):
            return all_names(fun) | all_names(arg)
        case Op(_, args, _):
            names: set[str] = set()
            for a in args:
                names |= all_names(a)
            return names
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------- printing

def _is_choice(t: Term) -> bool:
    return isinstance(t, Op) and t.name == "choice"


def pretty(t: Term) -> str:
    match t:
        case Var(name):
            return name
        case Lam(binder, body):
            return f"\\{binder}. {pretty(body)}"
        case App(fun, arg):
            head = pretty(fun) if isinstance(fun, Var) else f"({pretty(fun)})"
            return f"{head} {_atom(arg)}"
        case Op("choice", (left, right), p):
            # left-associative and loosest; a lambda would swallow what follows it
            lhs = f"({pretty(left)})" if isinstance(left, Lam) else pretty(left)
            rhs = f"({pretty(right)})" if isinstance(right, Lam) or _is_choice(right) else pretty(right)
            return f"{lhs} (+)[{p}] {rhs}"
        case Op("out", args, w):
            return f"out[{w}]({', '.join(pretty(a) for a in args)})"
        case Op(name, args, _):
            return f"{name}({', '.join(pretty(a) for a in args)})"
    raise TypeError(f"not a term: {t!r}")


def _atom(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Op) and not _is_choice(t):
        return pretty(t)
    return f"({pretty(t)})"


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<choice>\(\+\))
  | (?P<rational>\d+(?:/\d+)?)
  | (?P<ident>%?[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>[\\λ.(),\[\]])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int
    glued: bool = False  # no whitespace before this token


def tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    after_ws = True
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind == "ws":
            nl = chunk.count("\n")
            if nl:
                line += nl
                line_start = pos + chunk.rindex("\n") + 1
            after_ws = True
        else:
            if kind == "punct" and chunk == "λ":
                chunk = "\\"
            toks.append(_Tok(kind, chunk, line, pos - line_start + 1, glued=not after_ws))
            after_ws = False
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str, allow_reserved: bool):
        self.toks = tokenize(text)
        self.i = 0
        self.allow_reserved = allow_reserved
        used = [t.text for t in self.toks if t.kind == "ident" and t.text.startswith(RESERVED_PREFIX)]
        if used and not allow_reserved:
            tok = next(t for t in self.toks if t.kind == "ident" and t.text.startswith(RESERVED_PREFIX))
            raise ParseError(f"identifier {tok.text!r} uses the reserved prefix", tok.line, tok.col)
        self.counter = 0
        self.taken = set(used)

    def fresh(self) -> str:
        while True:
            self.counter += 1
            name = f"{RESERVED_PREFIX}f{self.counter}"
            if name not in self.taken:
                return name

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.tok.line, self.tok.col)

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text:
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        tok = self.tok
        self.i += 1
        return tok

    def ident(self) -> str:
        if self.tok.kind != "ident":
            raise self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        name = self.tok.text
        self.i += 1
        return name

    def parse(self) -> Term:
        t = self.comp(frozenset())
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")
        return t

    def comp(self, bound: frozenset[str]) -> Term:
        left = self.app(bound)
        while self.tok.kind == "choice":
            self.i += 1
            self.expect("[")
            if self.tok.kind != "rational":
                raise self.error("expected a rational weight")
            p = Fraction(self.tok.text)
            self.i += 1
            self.expect("]")
            right = self.app(bound)
            left = Op("choice", (left, right), p)
        return left

    def starts_atom(self) -> bool:
        t = self.tok
        return t.kind == "ident" or t.text in ("(", "\\")

    def app(self, bound: frozenset[str]) -> Term:
        if not self.starts_atom():
            raise self.error(f"expected a term, found {self.tok.text or 'end of input'!r}")
        head = self.atom(bound)
        while self.starts_atom():
            head = self.mk_app(head, self.atom(bound))
        return head

    def mk_app(self, fun: Term, arg: Term) -> Term:
        if fun.is_value:
            return App(fun, arg)
        x = self.fresh()
        return App(Lam(x, App(Var(x), arg)), fun)

    def atom(self, bound: frozenset[str]) -> Term:
        tok = self.tok
        if tok.text == "\\":
            self.i += 1
            x = self.ident()
            self.expect(".")
            return Lam(x, self.comp(bound | {x}))
        if tok.text == "(":
            self.i += 1
            t = self.comp(bound)
            self.expect(")")
            return t
        name = self.ident()
        nxt = self.tok
        if name == "out" and nxt.text == "[" and nxt.glued:
            self.i += 1
            if self.tok.kind != "ident" and self.tok.text != "]":
                raise self.error("expected an output word")
            word = ""
            if self.tok.kind == "ident":
                word = self.tok.text
                self.i += 1
            self.expect("]")
            args = self.op_args(bound)
            return Op("out", tuple(args), word)
        if nxt.text == "(" and nxt.glued:
            return Op(name, tuple(self.op_args(bound)))
        if name not in bound and name in BUILTINS:
            return BUILTINS[name]
        return Var(name)

    def op_args(self, bound: frozenset[str]) -> list[Term]:
        self.expect("(")
        args = [self.comp(bound)]
        while self.tok.text == ",":
            self.i += 1
            args.append(self.comp(bound))
        self.expect(")")
        return args


def parse(text: str, closed: bool = True, allow_reserved: bool = False) -> Term:
    """Parse source text into a kernel term.

    ``I`` and ``omega`` abbreviate the identity and the self-application loop
    unless bound by an enclosing lambda.  An identifier immediately followed by
    ``(`` (no space) is an operation call.
    """
    t = _Parser(text, allow_reserved).parse()
    if closed and t.free_vars:
        raise OpenTermError(f"free variables: {', '.join(sorted(t.free_vars))}")
    return t


# ---------------------------------------------------------------- substitution

def _fresh_variant(name: str, avoid: set[str] | frozenset[str]) -> str:
    candidate = name + "'"
    while candidate in avoid:
        candidate += "'"
    return candidate


def substitute(t: Term, x: str, v: Term) -> Term:
    """Capture-avoiding ``t{x:=v}``."""
    if not v.is_value:
        raise ValueError("only values may be substituted")
    if x not in t.free_vars:
        return t
    return _subst(t, x, v, v.free_vars)


def _subst(t: Term, x: str, v: Term, fv: frozenset[str]) -> Term:
    if x not in t.free_vars:
        return t
    match t:
        case Var(_):
            return v
        case Lam(y, body):
            if y in fv:
                y2 = _fresh_variant(y, fv | body.free_vars | {x})
                body = _subst(body, y, Var(y2), frozenset((y2,)))
                y = y2
            return Lam(y, _subst(body, x, v, fv))
        case App(fun, arg):
            return App(_subst(fun, x, v, fv), _subst(arg, x, v, fv))
        case Op(name, args, param):
            return Op(name, tuple(_subst(a, x, v, fv) for a in args), param)
    raise TypeError(f"not a term: {t!r}")


def alpha_eq(t: Term, u: Term) -> bool:
    return _alpha(t, u, {}, {}, 0)


def _alpha(t: Term, u: Term, lt: dict, lu: dict, depth: int) -> bool:
    match t, u:
        case Var(a), Var(b):
            da, db = lt.get(a), lu.get(b)
            if da is None and db is None:
                return a == b
            return da == db
        case Lam(a, bt), Lam(b, bu):
            return _alpha(bt, bu, {**lt, a: depth}, {**lu, b: depth}, depth + 1)
        case App(f1, a1), App(f2, a2):
            return _alpha(f1, f2, lt, lu, depth) and _alpha(a1, a2, lt, lu, depth)
        case Op(n1, as1, p1), Op(n2, as2, p2):
            return (n1 == n2 and p1 == p2 and len(as1) == len(as2)
                    and all(_alpha(a, b, lt, lu, depth) for a, b in zip(as1, as2)))
    return False


# ---------------------------------------------------------------- evaluation contexts

@dataclass(frozen=True)
class EvalSplit:
    """``context`` lists value frames outermost first; each frame ``v`` stands for ``v<.>``."""

    context: tuple[Term, ...]
    focus: Term

    def plug(self, u: Term | None = None) -> Term:
        return plug(self.context, self.focus if u is None else u)


def plug(context: tuple[Term, ...] | list[Term], u: Term) -> Term:
    for frame in reversed(context):
        u = App(frame, u)
    return u


def decompose(t: Term) -> EvalSplit:
    if t.free_vars:
        raise OpenTermError(f"cannot decompose an open term (free: {', '.join(sorted(t.free_vars))})")
    frames: list[Term] = []
    while isinstance(t, App) and not t.arg.is_value:
        frames.append(t.fun)
        t = t.arg
    return EvalSplit(tuple(frames), t)


def is_redex(t: Term) -> bool:
    return (isinstance(t, App) and isinstance(t.fun, Lam) and t.arg.is_value) or isinstance(t, Op)


def subterms(t: Term) -> Iterator[Term]:
    yield t
    match t:
        case Lam(_, body):
            yield from subterms(body)
        case App(fun, arg):
            yield from subterms(fun)
            yield from subterms(arg)
        case Op(_, args, _):
            for a in args:
                yield from subterms(a)
