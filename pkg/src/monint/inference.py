"""Evaluation-guided type inference.

The term is run forward for at most ``fuel`` steps.  The last element is typed
directly (values with ``eta(0)``, anything else with ``bot`` in infinitary mode)
and each earlier layer is then typed from the next one by subject expansion,
one support element at a time.
"""

from __future__ import annotations

from dataclasses import dataclass

from .derivation import (FINITARY, INFINITARY, VALUE_RULES, Derivation, MonadicDerivation, abs_node,
                         app_node, bot_node, check, empty_value_node, env_extend, int_node, op_node,
                         unit_node, var_node)
from .monad import BOTTOM, MonadicElement, MonadSpec, eta, obs_collapse, scale, support, union
from .semantics import Trace, run_element, step_root
from .syntax import App, Lam, Op, Term, Var, decompose, plug, substitute
from .types import Arrow, Intersection


class InferenceError(Exception):
    pass


class NotConvergent(InferenceError):
    pass


class ModeError(InferenceError):
    pass


class TableConflict(InferenceError):
    pass


@dataclass
class Inferred:
    derivation: Derivation
    type: MonadicElement
    trace: Trace
    mode: str

    @property
    def obs(self) -> MonadicElement:
        return obs_collapse(self.type)

    @property
    def fuel_used(self) -> int:
        return self.trace.steps

    @property
    def stabilized(self) -> bool:
        return self.trace.converged


def _check_mode(spec: MonadSpec, mode: str) -> None:
    if mode not in (FINITARY, INFINITARY):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == FINITARY and spec.erasing:
        raise ModeError(f"monad {spec.name} has erasing operations; use infinitary mode")


def infer(spec: MonadSpec, t: Term, fuel: int, mode: str = FINITARY, validate: bool = True) -> Inferred:
    _check_mode(spec, mode)
    trace = run_element(spec, eta(spec, t), fuel)
    family = backward(spec, trace, mode)
    d = family[t]
    if validate:
        verdict = check(d, spec, mode)
        if not verdict:
            raise InferenceError(f"internal error, produced derivation rejected: {verdict}")
    return Inferred(d, d.type, trace, mode)


def infer_monadic(spec: MonadSpec, e: MonadicElement, fuel: int,
                  mode: str = FINITARY) -> tuple[MonadicDerivation, Trace]:
    """Type a monadic element branch by branch from a fresh run starting at ``e``."""
    _check_mode(spec, mode)
    trace = run_element(spec, e, fuel)
    family = backward(spec, trace, mode)
    premises = tuple(family[b.payload] for b in e.branches)
    assembled = union(scale(p.type, b.weight, b.grade) for b, p in zip(e.branches, premises))
    unit_shaped = len(e.branches) == 1 and e.branches[0].weight == 1 and e.branches[0].grade == spec.unit_grade
    return MonadicDerivation("ext-unit" if unit_shaped else "ext-g", e, assembled, premises), trace


def seed(spec: MonadSpec, trace: Trace, mode: str) -> dict[Term, Derivation]:
    # approximation zero is empty, so with no fuel even values get bot
    type_values = mode == FINITARY or trace.fuel >= 1
    family = {}
    for s in support(trace.final):
        if s.is_value and type_values:
            family[s] = empty_value_node(spec, {}, s)
        elif mode == INFINITARY:
            family[s] = bot_node({}, s)
        else:
            raise NotConvergent(f"not finitely convergent within fuel {trace.fuel}")
    return family


def backward(spec: MonadSpec, trace: Trace, mode: str) -> dict[Term, Derivation]:
    """Derivations for every support element of the trace's initial element."""
    family = seed(spec, trace, mode)
    for depth in range(len(trace.layers) - 1, -1, -1):
        nxt, left = family, trace.fuel - depth - 1
        family = {s: expand(spec, s, nxt.__getitem__, mode, left) for s in trace.layers[depth].results}
    return family


def expand(spec: MonadSpec, t: Term, nxt, mode: str, left: int = 0) -> Derivation:
    """Type ``t`` given ``nxt``, which types every payload of ``step(t)``.

    ``left`` is the fuel remaining after this step; it only matters for
    truncated derivations in infinitary mode.
    """
    split = decompose(t)
    reducts = support(step_root(spec, split.focus))
    return _expand_at(spec, split.context, split.focus, reducts, nxt, mode, left)


def _truncated(d: Derivation, mode: str) -> Derivation:
    # anything typed bot in infinitary mode is stated directly by the bot rule
    if mode == INFINITARY and d.rule != "bot" and d.type.is_bottom:
        return bot_node(d.env, d.subject)
    return d


def _expand_at(spec, ctx, focus, reducts, nxt, mode, left) -> Derivation:
    if not ctx:
        return _truncated(_expand_root(spec, focus, reducts, nxt, mode, left), mode)
    w, rest = ctx[0], ctx[1:]
    inner = plug(rest, focus)
    comp: dict[Term, Derivation] = {}
    arrows: dict[Intersection, Derivation] = {}
    for u in reducts:
        s = plug(rest, u)
        delta = nxt(App(w, s))
        if delta.rule == "bot":
            comp[s] = bot_node({}, s)
            continue
        if delta.rule != "app":
            raise InferenceError(f"expected an app derivation for {App(w, s)}, found {delta.rule}")
        *values, comp[s] = delta.premises
        for p in values:
            known = arrows.get(p.type.domain)
            if known is None:
                arrows[p.type.domain] = p
            elif known.type != p.type:
                raise TableConflict(f"two results for argument type {p.type.domain} of {w}: {known.type} vs {p.type}")
    d_inner = _expand_at(spec, rest, focus, reducts, comp.__getitem__, mode, left)
    return _truncated(app_node({}, App(w, inner), arrows.values(), d_inner), mode)


def _expand_root(spec, focus, reducts, nxt, mode, left) -> Derivation:
    if focus.is_value:
        return nxt(focus)
    if isinstance(focus, Op):
        present = set(reducts)
        premises = []
        for a in focus.args:
            if a in present:
                premises.append(nxt(a))
            elif mode == INFINITARY:
                premises.append(bot_node({}, a))
            else:
                raise ModeError(f"{focus.name} erases an argument; finitary typing is impossible")
        return op_node(spec, {}, focus, premises)
    lam, v = focus.fun, focus.arg
    d = nxt(substitute(lam.body, lam.binder, v))
    if d.rule == "bot":
        return bot_node({}, focus)
    i, d_v, d_body = expand_beta(d, lam.body, lam.binder, v)
    if mode == INFINITARY and d.has_bot():
        # A cut-off body's result depends on the fuel left, so the same
        # function may meet the same argument type with a different outcome
        # in a faster branch.  Tagging the argument with a fuel-indexed arrow
        # that every abstraction inhabits keeps application tables functional.
        tag = fuel_tag(left)
        i = i | Intersection((tag,))
        d_v = int_node({}, v, d_v.premises + (tag_node(v, left),))
        d_body = weaken(d_body, env_extend(d_body.env, lam.binder, i))
    fun = abs_node({}, lam, i, d_body)
    return app_node({}, focus, [fun], unit_node(spec, {}, d_v))


def fuel_tag(n: int) -> Arrow:
    """``J_n -> bot`` where ``J_0`` is empty and ``J_(n+1) = {J_n -> bot}``."""
    dom = Intersection()
    for _ in range(n):
        dom = Intersection((Arrow(dom, BOTTOM),))
    return Arrow(dom, BOTTOM)


def tag_node(v: Lam, n: int) -> Derivation:
    tag = fuel_tag(n)
    return abs_node({}, v, tag.domain, bot_node(env_extend({}, v.binder, tag.domain), v.body))


def expand_beta(d: Derivation, r: Term, x: str, v: Term) -> tuple[Intersection, Derivation, Derivation]:
    """Split a derivation of ``r{x:=v}`` into one for ``v`` and one for ``r`` under ``x : I``.

    Walking ``r`` alongside ``d`` tells substituted copies of ``v`` apart from
    subterms that merely look the same.  Every arrow given to a copy of ``v``
    is harvested; ``I`` is their union.
    """
    if d.subject != substitute(r, x, v):
        raise InferenceError("derivation subject does not match the substituted body")
    harvest: dict = {}

    def walk(d: Derivation, r: Term) -> Derivation:
        if d.rule == "bot":
            return Derivation("bot", d.env, r, d.type)
        if x not in r.free_vars:
            return d
        if isinstance(r, Var):
            if d.rule in VALUE_RULES:
                harvest.setdefault(d.type, d)
                return var_node(d.env, x, d.type)
            if d.rule not in ("int", "unit"):
                raise InferenceError(f"unexpected rule {d.rule} at an occurrence of {x}")
            return Derivation(d.rule, d.env, r, d.type, tuple(walk(p, r) for p in d.premises))
        match d.rule:
            case "int" | "unit":
                parts = [r] * len(d.premises)
            case "abs":
                parts = [r.body]
            case "app":
                parts = [r.fun] * (len(d.premises) - 1) + [r.arg]
            case "op":
                parts = list(r.args)
            case _:
                raise InferenceError(f"unexpected rule {d.rule} above an occurrence of {x}")
        premises = tuple(walk(p, part) for p, part in zip(d.premises, parts))
        return Derivation(d.rule, d.env, r, d.type, premises, d.table)

    rebuilt = walk(d, r)
    i = Intersection(tuple(harvest))
    d_v = int_node(d.env, v, [reroot(p, d.env) for p in harvest.values()])
    return i, d_v, weaken(rebuilt, env_extend(rebuilt.env, x, i))


def weaken(d: Derivation, env) -> Derivation:
    """Enlarge the environment of ``d`` to ``env`` and propagate the new bindings upwards."""
    for x, i in d.env.items():
        if x not in env or not i.issubset(env[x]):
            raise InferenceError(f"environment does not extend the derivation's at {x}")
    extra = {x: i for x, i in env.items() if len(i) and i != d.env.get(x)}
    return _weaken(d, extra, {})


def _weaken(d: Derivation, extra: dict, memo: dict) -> Derivation:
    if not extra:
        return d
    key = (id(d), tuple(sorted(extra)))
    if key in memo:
        return memo[key]
    env = dict(d.env)
    for x, i in extra.items():
        env[x] = env[x] | i if x in env else i
    above = extra
    if d.rule == "abs" and d.subject.binder in extra:
        above = {y: i for y, i in extra.items() if y != d.subject.binder}
    premises = tuple(_weaken(p, above, memo) for p in d.premises)
    out = Derivation(d.rule, env, d.subject, d.type, premises, d.table)
    memo[key] = out
    return out


def reroot(d: Derivation, env) -> Derivation:
    """Re-derive ``d`` under ``env`` when its subject's free variables do not depend on the change."""
    if d.env == env:
        return d
    if d.rule == "abs":
        inner = env_extend(env, d.subject.binder, d.type.domain)
        premises = (reroot(d.premises[0], inner),)
    else:
        premises = tuple(reroot(p, env) for p in d.premises)
    return Derivation(d.rule, env, d.subject, d.type, premises, d.table)


__all__ = ["infer", "infer_monadic", "expand_beta", "weaken", "reroot", "backward", "expand", "seed",
           "Inferred", "InferenceError", "NotConvergent", "ModeError", "TableConflict"]
