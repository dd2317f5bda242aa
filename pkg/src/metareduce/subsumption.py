"""Theta-subsumption between metarules."""

from __future__ import annotations

from .clause import FIRST_ORDER, SECOND_ORDER, Literal, Metarule, Variable


def _match_literal(src: Literal, dst: Literal, pmap: dict, fmap: dict, trail: list) -> bool:
    if len(src.args) != len(dst.args):
        return False
    p = pmap.get(src.pred)
    if p is None:
        pmap[src.pred] = dst.pred
        trail.append((pmap, src.pred))
    elif p != dst.pred:
        return False
    for a, b in zip(src.args, dst.args):
        v = fmap.get(a)
        if v is None:
            fmap[a] = b
            trail.append((fmap, a))
        elif v != b:
            return False
    return True


def _undo(trail: list, mark: int) -> None:
    while len(trail) > mark:
        d, k = trail.pop()
        del d[k]


def subsumption_maps(c: Metarule, d: Metarule, *, first_only: bool = False):
    """Yield every ``(pred_map, fo_map)`` with c's head sent to d's head and
    c's body sent into d's body."""
    pmap: dict[int, int] = {}
    fmap: dict[int, int] = {}
    trail: list = []
    if not _match_literal(c.head, d.head, pmap, fmap, trail):
        return
    by_arity: dict[int, list[Literal]] = {}
    for lit in d.body:
        by_arity.setdefault(len(lit.args), []).append(lit)
    # most constrained first: fewest targets, then most variables already bound
    lits = sorted(c.body, key=lambda l: (len(by_arity.get(len(l.args), ())),
                                         -sum(a in fmap for a in l.args)))
    if any(len(l.args) not in by_arity for l in lits):
        return

    def rec(i):
        if i == len(lits):
            yield dict(pmap), dict(fmap)
            return
        lit = lits[i]
        for target in by_arity[len(lit.args)]:
            mark = len(trail)
            if _match_literal(lit, target, pmap, fmap, trail):
                yield from rec(i + 1)
            _undo(trail, mark)

    for found in rec(0):
        yield found
        if first_only:
            return


def subsumes(c: Metarule, d: Metarule) -> dict[Variable, Variable] | None:
    """A substitution theta with c.theta a subset of d, or None.

    Keys are variables of ``c`` and values variables of ``d``; the two
    clauses are implicitly standardized apart.
    """
    if c.head == d.head and c.body == d.body:
        return {v: v for v in c.variables()}
    for pmap, fmap in subsumption_maps(c, d, first_only=True):
        out = {Variable(SECOND_ORDER, k): Variable(SECOND_ORDER, v) for k, v in pmap.items()}
        out.update({Variable(FIRST_ORDER, k): Variable(FIRST_ORDER, v) for k, v in fmap.items()})
        return out
    return None


def is_subsumed(c: Metarule, d: Metarule) -> bool:
    for _ in subsumption_maps(c, d, first_only=True):
        return True
    return False


def is_tautology(m: Metarule) -> bool:
    return m.head in m.body


# head equality patterns: a subsumer's head must be at least as general
def head_pattern(lit: Literal) -> tuple[int, ...]:
    seen: dict[int, int] = {}
    return tuple(seen.setdefault(a, len(seen)) for a in lit.args)


def pattern_generalizes(general: tuple[int, ...], specific: tuple[int, ...]) -> bool:
    """True if a head with equality pattern ``general`` can be instantiated
    to one with pattern ``specific``."""
    if len(general) != len(specific):
        return False
    img: dict[int, int] = {}
    for g, s in zip(general, specific):
        if img.setdefault(g, s) != s:
            return False
    return True
