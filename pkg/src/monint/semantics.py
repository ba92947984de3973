"""Monadic small-step reduction, traces with provenance, and bounded observations."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .monad import (BOTTOM, MonadicElement, MonadSpec, MonadError, apply_op, bind, eta,
                    fmap, obs_collapse, support)
from .syntax import App, Lam, Op, Term, decompose, plug, substitute


class SemanticsError(ValueError):
    pass


class BranchLimit(SemanticsError):
    """Raised when an element outgrows the caller's branch budget; branches are never merged."""


def step_root(spec: MonadSpec, focus: Term) -> MonadicElement:
    """One root step: beta, the generic effect of an operation, or a value looping to itself."""
    if focus.is_value:
        return eta(spec, focus)
    if isinstance(focus, App) and isinstance(focus.fun, Lam) and focus.arg.is_value:
        return eta(spec, substitute(focus.fun.body, focus.fun.binder, focus.arg))
    if isinstance(focus, Op):
        return apply_op(spec, focus.name, [eta(spec, a) for a in focus.args], focus.param)
    raise SemanticsError(f"not a redex: {focus}")


def step(spec: MonadSpec, t: Term) -> MonadicElement:
    split = decompose(t)
    result = step_root(spec, split.focus)
    if not split.context:
        return result
    return fmap(result, lambda u: plug(split.context, u))


def kleisli_step(spec: MonadSpec, m: MonadicElement) -> MonadicElement:
    return bind(spec, m, lambda t: step(spec, t))


def all_values(m: MonadicElement) -> bool:
    return all(b.payload.is_value for b in m.branches)


@dataclass
class Layer:
    """Provenance for one reduction step: every support element of ``element`` and its one-step result."""

    element: MonadicElement
    results: dict[Term, MonadicElement]

    def flatten(self) -> MonadicElement:
        return bind(None, self.element, self.results.__getitem__)

    def rows(self):
        for b in self.element.branches:
            yield b, self.results[b.payload]


@dataclass
class Trace:
    spec: MonadSpec
    initial: MonadicElement
    layers: list[Layer] = field(default_factory=list)
    final: MonadicElement = BOTTOM
    fuel: int = 0

    @property
    def steps(self) -> int:
        return len(self.layers)

    @property
    def elements(self) -> list[MonadicElement]:
        return [layer.element for layer in self.layers] + [self.final]

    @property
    def converged(self) -> bool:
        """True when the final element is supported by values only."""
        return all_values(self.final)

    def check_flatten(self) -> None:
        for i, layer in enumerate(self.layers):
            nxt = self.layers[i + 1].element if i + 1 < len(self.layers) else self.final
            if layer.flatten() != nxt:
                raise SemanticsError(f"trace layer {i} does not flatten to layer {i + 1}")


def run_element(spec: MonadSpec, m: MonadicElement, fuel: int, max_branches: int | None = None) -> Trace:
    if fuel < 0:
        raise ValueError("fuel must be non-negative")
    memo: dict[Term, MonadicElement] = {}
    trace = Trace(spec, m, fuel=fuel)
    current = m
    for _ in range(fuel):
        if all_values(current):
            break
        results = {}
        for t in support(current):
            r = memo.get(t)
            if r is None:
                r = memo[t] = step(spec, t)
            results[t] = r
        layer = Layer(current, results)
        trace.layers.append(layer)
        current = layer.flatten()
        if max_branches is not None and len(current) > max_branches:
            raise BranchLimit(f"more than {max_branches} branches after {trace.steps} steps")
    trace.final = current
    return trace


def run(spec: MonadSpec, t: Term, fuel: int, max_branches: int | None = None) -> Trace:
    return run_element(spec, eta(spec, t), fuel, max_branches)


def converges(spec: MonadSpec, t: Term, fuel: int) -> MonadicElement | None:
    trace = run(spec, t, fuel)
    return trace.final if trace.converged else None


def keep_values(spec: MonadSpec, m: MonadicElement) -> MonadicElement:
    """Bind with the map sending values to themselves and everything else to the empty element."""
    return bind(spec, m, lambda u: eta(spec, u) if u.is_value else BOTTOM)


def approx_sem(spec: MonadSpec, t: Term, n: int) -> MonadicElement:
    if n == 0:
        return BOTTOM
    return keep_values(spec, run(spec, t, n).final)


def obs_n(spec: MonadSpec, t: Term, n: int) -> MonadicElement:
    return obs_collapse(approx_sem(spec, t, n))


@dataclass
class Chain:
    observations: list[MonadicElement]
    stabilized: bool
    stable_from: int | None

    @property
    def status(self) -> str:
        if self.stabilized:
            return f"stabilized at n={self.stable_from}"
        return "not stabilized (fuel exhausted)"


def observed_chain(spec: MonadSpec, t: Term, fuel: int) -> Chain:
    """``[obs_n(t, 0), ..., obs_n(t, fuel)]`` from a single run.

    The chain counts as stabilized only when the run reached a value-only
    element; equal consecutive entries alone do not prove the limit.
    """
    trace = run(spec, t, fuel)
    elements = trace.elements
    obs = [BOTTOM]
    for k in range(1, fuel + 1):
        e = elements[min(k, len(elements) - 1)]
        obs.append(obs_collapse(keep_values(spec, e)))
    if trace.converged:
        return Chain(obs, True, max(trace.steps, 1) if fuel >= 1 else None)
    return Chain(obs, False, None)


def total_weight(m: MonadicElement) -> Fraction:
    return m.total_weight()


__all__ = ["MonadError", "SemanticsError", "BranchLimit", "step_root", "step", "kleisli_step", "run", "run_element",
           "converges", "approx_sem", "obs_n", "observed_chain", "Trace", "Layer", "Chain",
           "keep_values", "all_values"]
