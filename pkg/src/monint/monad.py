"""Finite weighted, graded formal sums standing for T(X) in every bundled monad.

An element is a canonically sorted multiset of branches ``weight * (grade, payload)``.
Branches are never merged: ``1/2*x + 1/2*x`` differs from ``1*x`` because the
bundled monads (multidistributions, multisets) drop idempotency.

Grades are ``()`` for the trivial monoid, ``str`` for words and ``int`` for costs;
all three compose with ``+``.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable

SINGLE, PROBABILISTIC, COUNTING = "single", "probabilistic", "counting"
TRIVIAL, WORDS, COST = "trivial", "words", "cost"

OP_ARITY = {"out": 1, "tick": 1, "choice": 2, "amb": 2}


class MonadError(ValueError):
    pass


class UnknownOperation(MonadError):
    pass


class Star:
    """The single inhabitant of the unit type that observations map payloads to."""

    sort_key = "*"

    def __repr__(self) -> str:
        return "STAR"

    def __reduce__(self):
        return "STAR"


STAR = Star()


def payload_key(x: Any):
    return getattr(x, "sort_key", x)


@dataclass(frozen=True)
class Branch:
    weight: Fraction
    grade: Any
    payload: Any

    @property
    def key(self):
        return (self.grade, payload_key(self.payload), self.weight)


@dataclass(frozen=True)
class MonadicElement:
    branches: tuple[Branch, ...] = ()

    @staticmethod
    def of(branches: Iterable[Branch]) -> "MonadicElement":
        return MonadicElement(tuple(sorted(branches, key=lambda b: b.key)))

    def __post_init__(self):
        object.__setattr__(self, "_hash", None)

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = hash(self.branches)
            object.__setattr__(self, "_hash", h)
        return h

    def __eq__(self, other) -> bool:
        return isinstance(other, MonadicElement) and self.branches == other.branches

    def __iter__(self):
        return iter(self.branches)

    def __len__(self) -> int:
        return len(self.branches)

    def __bool__(self) -> bool:
        return bool(self.branches)

    @property
    def is_bottom(self) -> bool:
        return not self.branches

    def total_weight(self) -> Fraction:
        return sum((b.weight for b in self.branches), Fraction(0))

    @property
    def sort_key(self) -> str:
        return format_element(self)

    def __repr__(self) -> str:
        return f"MonadicElement({format_element(self, payload_fmt=repr)})"


BOTTOM = MonadicElement()


@dataclass(frozen=True)
class MonadSpec:
    name: str
    discipline: str
    grade_kind: str
    ops: frozenset = field(default_factory=frozenset)
    alphabet: str = ""
    erasing: bool = False

    @property
    def unit_grade(self):
        return {TRIVIAL: (), WORDS: "", COST: 0}[self.grade_kind]

    def __str__(self) -> str:
        return self.name


def _spec(name, discipline, grade_kind, ops=(), alphabet="", erasing=False) -> MonadSpec:
    return MonadSpec(name, discipline, grade_kind, frozenset(ops), alphabet, erasing)


PURE = _spec("pure", SINGLE, TRIVIAL)
COST_MONAD = _spec("cost", SINGLE, COST, ["tick"])
MULTIDIST = _spec("multidist", PROBABILISTIC, TRIVIAL, ["choice"])
MULTISET = _spec("multiset", COUNTING, TRIVIAL, ["amb"])
COST_MULTIDIST = _spec("cost*multidist", PROBABILISTIC, COST, ["tick", "choice"])


def writer(alphabet: str = "ab") -> MonadSpec:
    return _spec(f"writer:{alphabet}", SINGLE, WORDS, ["out"], alphabet)


def writer_multidist(alphabet: str = "ab") -> MonadSpec:
    return _spec(f"writer:{alphabet}*multidist", PROBABILISTIC, WORDS, ["out", "choice"], alphabet)


def erasing_multidist() -> MonadSpec:
    """Multidistributions whose choice also accepts the weights 0 and 1, which drop an argument."""
    return _spec("multidist!erasing", PROBABILISTIC, TRIVIAL, ["choice"], erasing=True)


def bundled_specs() -> list[MonadSpec]:
    return [PURE, writer(), COST_MONAD, MULTIDIST, MULTISET, COST_MULTIDIST, writer_multidist()]


def parse_monad(selector: str) -> MonadSpec:
    """Resolve a selector such as ``cost*multidist`` or ``writer:ab``."""
    s = selector.strip()
    fixed = {m.name: m for m in (PURE, COST_MONAD, MULTIDIST, MULTISET, COST_MULTIDIST)}
    if s in fixed:
        return fixed[s]
    m = re.fullmatch(r"writer:([A-Za-z]+)(\*multidist)?", s)
    if m and len(set(m.group(1))) == len(m.group(1)):
        return writer_multidist(m.group(1)) if m.group(2) else writer(m.group(1))
    raise MonadError(f"unknown monad selector {selector!r}")


# ---------------------------------------------------------------- core operations

def eta(spec: MonadSpec, x: Any) -> MonadicElement:
    return MonadicElement((Branch(Fraction(1), spec.unit_grade, x),))


def bind(spec: MonadSpec | None, m: MonadicElement, f: Callable[[Any], MonadicElement]) -> MonadicElement:
    out = []
    for b in m.branches:
        try:
            fx = f(b.payload)
        except KeyError as exc:
            raise MonadError(f"function undefined on payload {b.payload}") from exc
        for c in fx.branches:
            out.append(Branch(b.weight * c.weight, b.grade + c.grade, c.payload))
    return MonadicElement.of(out)


def fmap(m: MonadicElement, f: Callable[[Any], Any]) -> MonadicElement:
    return MonadicElement.of(Branch(b.weight, b.grade, f(b.payload)) for b in m.branches)


def scale(m: MonadicElement, weight: Fraction, grade: Any) -> MonadicElement:
    """Prefix one branch's weight and grade to every branch of ``m``.

    Both transformations are monotone, so canonical order is preserved.
    """
    return MonadicElement(tuple(Branch(weight * b.weight, grade + b.grade, b.payload) for b in m.branches))


def union(elements: Iterable[MonadicElement]) -> MonadicElement:
    return MonadicElement.of(b for m in elements for b in m.branches)


def apply_op(spec: MonadSpec, op_name: str, args: list[MonadicElement], param: Any = None) -> MonadicElement:
    """The generic effect of ``op_name`` applied to already-monadic arguments."""
    if op_name not in spec.ops:
        raise UnknownOperation(f"operation {op_name!r} is not available in monad {spec.name}")
    arity = OP_ARITY[op_name]
    if len(args) != arity:
        raise MonadError(f"operation {op_name!r} expects {arity} argument(s), got {len(args)}")
    match op_name:
        case "out":
            word = "" if param is None else str(param)
            if any(c not in spec.alphabet for c in word):
                raise MonadError(f"word {word!r} is not over the alphabet {spec.alphabet!r}")
            return MonadicElement.of(Branch(b.weight, word + b.grade, b.payload) for b in args[0])
        case "tick":
            return MonadicElement.of(Branch(b.weight, 1 + b.grade, b.payload) for b in args[0])
        case "choice":
            p = choice_weight(spec, param)
            left = [Branch(p * b.weight, b.grade, b.payload) for b in args[0]] if p else []
            right = [Branch((1 - p) * b.weight, b.grade, b.payload) for b in args[1]] if p != 1 else []
            return MonadicElement.of(left + right)
        case "amb":
            return MonadicElement.of(list(args[0]) + list(args[1]))
    raise UnknownOperation(op_name)


def choice_weight(spec: MonadSpec, param: Any) -> Fraction:
    try:
        p = Fraction(param)
    except (TypeError, ValueError) as exc:
        raise MonadError(f"choice needs a rational weight, got {param!r}") from exc
    lo_ok = p > 0 or (spec.erasing and p == 0)
    hi_ok = p < 1 or (spec.erasing and p == 1)
    if not (lo_ok and hi_ok):
        raise MonadError(f"choice weight {p} outside the open unit interval")
    return p


def erases(spec: MonadSpec, op_name: str, param: Any) -> bool:
    return op_name == "choice" and Fraction(param) in (0, 1)


def support(m: MonadicElement) -> list:
    """Distinct payloads in canonical order."""
    seen = {}
    for b in m.branches:
        seen.setdefault(b.payload, None)
    return list(seen)


def obs_collapse(m: MonadicElement) -> MonadicElement:
    return MonadicElement.of(Branch(b.weight, b.grade, STAR) for b in m.branches)


def leq(m1: MonadicElement, m2: MonadicElement) -> bool:
    """Sub-multiset inclusion of branches."""
    have = Counter(m2.branches)
    for b, n in Counter(m1.branches).items():
        if have[b] < n:
            return False
    return True


def check_discipline(spec: MonadSpec, m: MonadicElement) -> None:
    for b in m.branches:
        if not b.weight > 0:
            raise MonadError(f"non-positive weight {b.weight}")
        _check_grade(spec, b.grade)
    if spec.discipline == SINGLE:
        if len(m.branches) > 1 or any(b.weight != 1 for b in m.branches):
            raise MonadError(f"monad {spec.name} allows at most one branch of weight 1")
    elif spec.discipline == PROBABILISTIC:
        if m.total_weight() > 1:
            raise MonadError(f"total weight {m.total_weight()} exceeds 1")
    elif spec.discipline == COUNTING:
        if any(b.weight != 1 for b in m.branches):
            raise MonadError("multiset branches must have weight 1")


def _check_grade(spec: MonadSpec, g: Any) -> None:
    ok = {
        TRIVIAL: g == (),
        WORDS: isinstance(g, str) and all(c in spec.alphabet for c in g),
        COST: isinstance(g, int) and not isinstance(g, bool) and g >= 0,
    }[spec.grade_kind]
    if not ok:
        raise MonadError(f"grade {g!r} does not belong to monad {spec.name}")


# ---------------------------------------------------------------- text and JSON

def format_grade(g: Any) -> str:
    if isinstance(g, str):
        return g if g else "ε"
    return str(g)


def format_branch(b: Branch, payload_fmt: Callable[[Any], str] = str) -> str:
    parts = []
    if b.grade != ():
        parts.append(format_grade(b.grade))
    if b.payload is not STAR:
        parts.append(payload_fmt(b.payload))
    return f"{b.weight}*({', '.join(parts) if parts else '*'})"


def format_element(m: MonadicElement, payload_fmt: Callable[[Any], str] = str) -> str:
    if not m.branches:
        return "bot"
    return " + ".join(format_branch(b, payload_fmt) for b in m.branches)


def grade_to_json(g: Any):
    return None if g == () else g


def grade_from_json(spec: MonadSpec, g: Any):
    if spec.grade_kind == TRIVIAL:
        if g not in (None, ""):
            raise MonadError(f"monad {spec.name} has no grades, got {g!r}")
        return ()
    _check_grade(spec, g)
    return g


def element_to_json(m: MonadicElement, payload_fmt: Callable[[Any], Any] = str) -> list:
    return [{"p": f"{b.weight.numerator}/{b.weight.denominator}",
             "grade": grade_to_json(b.grade),
             "payload": "*" if b.payload is STAR else payload_fmt(b.payload)}
            for b in m.branches]


def element_from_json(spec: MonadSpec, data: list, payload_parse: Callable[[Any], Any]) -> MonadicElement:
    branches = []
    for item in data:
        payload = STAR if item["payload"] == "*" else payload_parse(item["payload"])
        branches.append(Branch(Fraction(item["p"]), grade_from_json(spec, item.get("grade")), payload))
    m = MonadicElement.of(branches)
    check_discipline(spec, m)
    return m
