"""Seeded random closed terms over one unary and one binary operation of a monad."""

from __future__ import annotations

import random
from fractions import Fraction

from monint.syntax import IDENTITY, OMEGA, App, Lam, Op, Term, Var

WEIGHTS = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))


class TermGen:
    def __init__(self, seed: int, omega_rate: float = 0.05, unary: str | None = "tick",
                 binary: str | None = "choice"):
        self.rng = random.Random(seed)
        self.omega_rate = omega_rate
        self.unary = unary
        self.binary = binary
        self.counter = 0

    def fresh(self) -> str:
        self.counter += 1
        return f"v{self.counter}"

    def value(self, depth: int, scope: tuple[str, ...]) -> Term:
        r = self.rng.random()
        if scope and (depth <= 0 or r < 0.4):
            return Var(self.rng.choice(scope))
        if depth <= 0 or r < 0.5:
            return IDENTITY
        x = self.fresh()
        return Lam(x, self.comp(depth - 1, scope + (x,)))

    def comp(self, depth: int, scope: tuple[str, ...] = ()) -> Term:
        if depth <= 0:
            return self.value(0, scope)
        r = self.rng.random()
        if r < self.omega_rate:
            return OMEGA
        if r < 0.25:
            return self.value(depth, scope)
        if r < 0.55:
            return App(self.value(depth - 1, scope), self.comp(depth - 1, scope))
        if r < 0.7:
            # general application, desugared as the parser would
            f = self.fresh()
            return App(Lam(f, App(Var(f), self.comp(depth - 1, scope + (f,)))), self.comp(depth - 1, scope))
        if r < 0.82 and self.unary:
            param = self.rng.choice(("a", "b", "ab")) if self.unary == "out" else None
            return Op(self.unary, (self.comp(depth - 1, scope),), param)
        if self.binary:
            param = self.rng.choice(WEIGHTS) if self.binary == "choice" else None
            return Op(self.binary, (self.comp(depth - 1, scope), self.comp(depth - 1, scope)), param)
        return App(self.value(depth - 1, scope), self.comp(depth - 1, scope))


OPS_FOR = {"pure": (None, None), "writer:ab": ("out", None), "cost": ("tick", None),
           "multidist": (None, "choice"), "multiset": (None, "amb"),
           "cost*multidist": ("tick", "choice"), "writer:ab*multidist": ("out", "choice")}


def corpus(n: int, seed: int = 0, depth: int = 6, monad: str = "cost*multidist",
           omega_rate: float = 0.05) -> list[Term]:
    unary, binary = OPS_FOR[monad]
    gen = TermGen(seed, omega_rate, unary, binary)
    return [gen.comp(depth) for _ in range(n)]
