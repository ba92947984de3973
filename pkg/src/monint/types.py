"""Monadic intersection types: arrows, intersections and monadic types.

Text syntax::

    0                      empty intersection
    {A, B}                 intersection
    I -> M                 arrow
    1/2*(3, I) + 1/2*(I)   monadic type; the grade is omitted for grade-free monads
    bot                    the empty monadic type
    eta(I)                 sugar for 1*(unit, I)
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

from .monad import (BOTTOM, Branch, MonadicElement, MonadSpec, MonadError, apply_op, bind, eta,
                    format_element, obs_collapse)


class TypeSyntaxError(ValueError):
    pass


class UncoveredSupport(ValueError):
    def __init__(self, missing: "Intersection"):
        self.missing = missing
        super().__init__(f"no table entry for intersection {missing}")


@dataclass(frozen=True, eq=False)
class Intersection:
    members: tuple["Arrow", ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(set(self.members), key=lambda a: a.sort_key))
        object.__setattr__(self, "members", ordered)
        object.__setattr__(self, "sort_key", format_intersection(ordered))
        object.__setattr__(self, "_hash", hash(self.sort_key))

    def __eq__(self, other) -> bool:
        return isinstance(other, Intersection) and self.sort_key == other.sort_key

    def __hash__(self) -> int:
        return self._hash

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, a) -> bool:
        return a in self.members

    def __or__(self, other: "Intersection") -> "Intersection":
        return Intersection(self.members + other.members)

    def issubset(self, other: "Intersection") -> bool:
        return set(self.members) <= set(other.members)

    def __str__(self) -> str:
        return self.sort_key

    __repr__ = __str__


@dataclass(frozen=True, eq=False)
class Arrow:
    domain: Intersection
    codomain: MonadicElement

    def __post_init__(self):
        key = f"{self.domain.sort_key} -> {format_monadic(self.codomain)}"
        object.__setattr__(self, "sort_key", key)
        object.__setattr__(self, "_hash", hash(key))

    def __eq__(self, other) -> bool:
        return isinstance(other, Arrow) and self.sort_key == other.sort_key

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        return self.sort_key

    __repr__ = __str__


MonadicType = MonadicElement
Type = Union[Arrow, Intersection, MonadicElement]
def intersection(members: Iterable[Arrow] = ()) -> Intersection:
    return Intersection(tuple(members))


def format_intersection(members: tuple[Arrow, ...]) -> str:
    if not members:
        return "0"
    return "{" + ", ".join(a.sort_key for a in members) + "}"


EMPTY = Intersection()


def format_monadic(m: MonadicElement) -> str:
    return format_element(m)


def format_type(g: Type) -> str:
    if isinstance(g, MonadicElement):
        return format_monadic(g)
    return g.sort_key


def canonicalize(g: Type) -> Type:
    """Rebuild ``g`` from its components; idempotent since constructors normalize."""
    match g:
        case Intersection():
            return Intersection(tuple(canonicalize(a) for a in g.members))
        case Arrow():
            return Arrow(canonicalize(g.domain), canonicalize(g.codomain))
        case MonadicElement():
            return MonadicElement.of(Branch(b.weight, b.grade, canonicalize(b.payload)) for b in g.branches)
    raise TypeError(f"not a type: {g!r}")


def type_eq(g1: Type, g2: Type) -> bool:
    return canonicalize(g1) == canonicalize(g2)


def type_bind(n: MonadicElement, table: Mapping[Intersection, MonadicElement]) -> MonadicElement:
    def lookup(i):
        try:
            return table[i]
        except KeyError:
            raise UncoveredSupport(i) from None
    return bind(None, n, lookup)


def type_op(spec: MonadSpec, op_name: str, args: list[MonadicElement], param=None) -> MonadicElement:
    return apply_op(spec, op_name, args, param)


def obs_type(m: MonadicElement) -> MonadicElement:
    return obs_collapse(m)


def eta_type(spec: MonadSpec, i: Intersection) -> MonadicElement:
    return eta(spec, i)


# ---------------------------------------------------------------- parsing

_TOK = re.compile(r"\s*(->|\d+(?:/\d+)?|ε|[A-Za-z_]+|[{}(),*+])")


def _tokens(text: str) -> list[str]:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOK.match(text, pos)
        if not m:
            raise TypeSyntaxError(f"unexpected character {text[pos]!r} at offset {pos} in {text!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


class _TypeParser:
    def __init__(self, text: str, spec: MonadSpec | None):
        self.text = text
        self.toks = _tokens(text)
        self.i = 0
        self.spec = spec

    def peek(self) -> str | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expected: str | None = None) -> str:
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise TypeSyntaxError(f"expected {expected or 'a token'} at token {self.i} in {self.text!r}")
        self.i += 1
        return tok

    def done(self):
        if self.peek() is not None:
            raise TypeSyntaxError(f"trailing input {self.peek()!r} in {self.text!r}")

    def intersection(self) -> Intersection:
        tok = self.take()
        if tok == "0":
            return EMPTY
        if tok != "{":
            raise TypeSyntaxError(f"expected an intersection in {self.text!r}")
        members = []
        if self.peek() == "}":
            self.take()
            return EMPTY
        members.append(self.arrow())
        while self.peek() == ",":
            self.take()
            members.append(self.arrow())
        self.take("}")
        return Intersection(tuple(members))

    def arrow(self) -> Arrow:
        dom = self.intersection()
        self.take("->")
        return Arrow(dom, self.monadic())

    def monadic(self) -> MonadicElement:
        if self.peek() == "bot":
            self.take()
            return BOTTOM
        branches = [self.branch()]
        while self.peek() == "+":
            self.take()
            branches.append(self.branch())
        return MonadicElement.of(b for group in branches for b in group)

    def unit_grade(self):
        return self.spec.unit_grade if self.spec is not None else ()

    def branch(self) -> list[Branch]:
        if self.peek() == "eta":
            self.take()
            self.take("(")
            i = self.intersection()
            self.take(")")
            return [Branch(Fraction(1), self.unit_grade(), i)]
        try:
            w = Fraction(self.take())
        except ValueError:
            raise TypeSyntaxError(f"expected a weight in {self.text!r}") from None
        self.take("*")
        self.take("(")
        nxt = self.toks[self.i + 1] if self.i + 1 < len(self.toks) else None
        if self.peek() == "{" or (self.peek() == "0" and nxt == ")"):
            grade = ()
            if self.spec is not None and self.spec.unit_grade != ():
                raise TypeSyntaxError(f"missing grade for monad {self.spec.name} in {self.text!r}")
        else:
            g = self.take()
            grade = "" if g == "ε" else int(g) if g.isdigit() else g
            self.take(",")
        i = self.intersection()
        self.take(")")
        return [Branch(w, grade, i)]


def parse_intersection(text: str, spec: MonadSpec | None = None) -> Intersection:
    p = _TypeParser(text, spec)
    i = p.intersection()
    p.done()
    return i


def parse_arrow(text: str, spec: MonadSpec | None = None) -> Arrow:
    p = _TypeParser(text, spec)
    a = p.arrow()
    p.done()
    return a


def parse_monadic(text: str, spec: MonadSpec | None = None) -> MonadicElement:
    p = _TypeParser(text, spec)
    m = p.monadic()
    p.done()
    return m


__all__ = ["Arrow", "Intersection", "MonadicType", "EMPTY", "intersection", "canonicalize", "type_eq",
           "type_bind", "type_op", "obs_type", "eta_type", "format_type", "parse_intersection",
           "parse_arrow", "parse_monadic", "UncoveredSupport", "TypeSyntaxError", "MonadError"]
