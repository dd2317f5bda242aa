"""Binary resolution between metarules and bounded closures.

Resolution always selects a body literal of the first parent and unifies it
with the head of the second parent, which is renamed apart first.  Both
sorts are unified: the predicate variables of the two literals and their
argument variables position by position.

``derives_k`` and ``entails_k`` dispatch to the goal directed prover in
``prover`` when every theory clause gives each literal its own predicate
variable (true of every enumerated fragment), and fall back to the plain
forward closure otherwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .clause import (
    FO_NAMES,
    PRED_NAMES,
    Literal,
    Metarule,
    canonical_form,
    render_parts,
)
from .fragments import ResourceGuardError
from .subsumption import head_pattern, is_subsumed, is_tautology, pattern_generalizes

CLOSURE_LIMIT = 1_000_000


def _find(parent: dict[int, int], x: int) -> int:
    root = x
    while parent.get(root, root) != root:
        root = parent[root]
    while parent.get(x, x) != root:
        parent[x], x = root, parent[x]
    return root


def _union(parent: dict[int, int], a: int, b: int) -> None:
    ra, rb = _find(parent, a), _find(parent, b)
    if ra != rb:
        # keep the smaller id so names of the first parent survive
        if rb < ra:
            ra, rb = rb, ra
        parent[rb] = ra


def _offsets(m: Metarule) -> tuple[int, int]:
    return max(m.pred_vars()) + 1, max(m.fo_vars(), default=-1) + 1


def resolve_parts(c1: Metarule, index: int, c2: Metarule):
    """Raw resolvent ``(head, body, pred_parent, fo_parent, offsets)``.

    The body lists the remaining literals of ``c1`` in order followed by the
    body of ``c2``; no canonicalization or duplicate removal happens here.
    Returns None when the selected literal and the head of ``c2`` differ in
    arity.
    """
    if not 0 <= index < len(c1.body):
        raise IndexError(f"body index {index} out of range for {c1.text}")
    sel = c1.body[index]
    if len(sel.args) != len(c2.head.args):
        return None
    np_, nf = _offsets(c1)
    pp: dict[int, int] = {}
    fp: dict[int, int] = {}
    _union(pp, sel.pred, c2.head.pred + np_)
    for a, b in zip(sel.args, c2.head.args):
        _union(fp, a, b + nf)

    def left(lit):
        return Literal(_find(pp, lit.pred), tuple(_find(fp, a) for a in lit.args))

    def right(lit):
        return Literal(_find(pp, lit.pred + np_), tuple(_find(fp, a + nf) for a in lit.args))

    head = left(c1.head)
    body = [left(b) for i, b in enumerate(c1.body) if i != index]
    body.extend(right(b) for b in c2.body)
    return head, body, pp, fp, (np_, nf)


def resolve(c1: Metarule, index: int, c2: Metarule) -> Metarule | None:
    """Resolvent of ``c1`` on its ``index``-th body literal with ``c2``."""
    parts = resolve_parts(c1, index, c2)
    if parts is None:
        return None
    head, body = parts[0], parts[1]
    h, b = canonical_form(head, body)
    return Metarule.from_canonical(h, b)


def _exact_size(c1: Metarule, c2: Metarule) -> bool:
    # with distinct predicate variables everywhere no two literals of a
    # resolvent can coincide, so its size is known before resolving
    return c1.pred_distinct and c2.pred_distinct


# --- traces --------------------------------------------------------------

@dataclass(frozen=True)
class ResolutionStep:
    parent: str
    index: int
    side: str
    unifier: tuple[tuple[str, str], ...]
    resolvent: str

    def to_dict(self) -> dict:
        return {
            "parent": self.parent,
            "index": self.index,
            "side": self.side,
            "unifier": [list(p) for p in self.unifier],
            "resolvent": self.resolvent,
        }


@dataclass
class DerivationTrace:
    """A linear derivation: start from ``root`` and resolve step by step."""

    root: str
    steps: list[ResolutionStep] = field(default_factory=list)

    @property
    def result(self) -> str:
        return self.steps[-1].resolvent if self.steps else self.root

    def __len__(self) -> int:
        return len(self.steps)

    def to_list(self) -> list[dict]:
        return [s.to_dict() for s in self.steps]

    def to_json(self) -> str:
        return json.dumps(self.to_list())

    def render(self) -> str:
        lines = [f"start  {self.root}"]
        for i, s in enumerate(self.steps, 1):
            lines.append(f"{i:>4}.  literal {s.index} with {s.side}")
            lines.append(f"       => {s.resolvent}")
        return "\n".join(lines)


def _side_name(kind: str, i: int) -> str:
    return (PRED_NAMES if kind == "p" else FO_NAMES)[i] + "'"


def make_step(parent: Metarule, index: int, side: Metarule) -> ResolutionStep | None:
    parent, side = parent.canonical(), side.canonical()
    if resolve_parts(parent, index, side) is None:
        return None
    sel = parent.body[index]
    pairs = [(PRED_NAMES[sel.pred], _side_name("p", side.head.pred))]
    pairs.extend((FO_NAMES[a], _side_name("f", b)) for a, b in zip(sel.args, side.head.args))
    res = resolve(parent, index, side)
    return ResolutionStep(parent.text, index, side.text, tuple(pairs), res.text)


def check_trace(trace: DerivationTrace, theory: Iterable[Metarule]) -> bool:
    """Replay a trace against a theory."""
    known = {m.text for m in theory}
    if trace.root not in known:
        return False
    from .clause import parse

    current = parse(trace.root)
    for s in trace.steps:
        if s.side not in known or s.parent != current.text:
            return False
        r = resolve(current, s.index, parse(s.side))
        if r is None or r.text != s.resolvent:
            return False
        current = r
    return True


# --- forward closure -------------------------------------------------------

def _canonical_list(theory: Iterable[Metarule]) -> list[Metarule]:
    seen: dict[str, Metarule] = {}
    for m in theory:
        c = m.canonical()
        seen.setdefault(c.text, c)
    return list(seen.values())


def _forward(theory: Sequence[Metarule], depth: int, max_body: int, keep=None, stop=None,
             limit: int | None = None):
    """Breadth first closure with parent links.

    ``keep`` filters which resolvents are retained as later first parents,
    ``stop`` ends the search as soon as it accepts a clause.  Returns
    ``(found, parents)`` where ``parents`` maps text to
    ``(parent, index, side)`` or None for theory clauses.
    """
    sides = sorted(theory, key=lambda m: len(m.body))
    parents: dict[str, tuple | None] = {}
    frontier = []
    for m in sides:
        if len(m.body) <= max_body and (keep is None or keep(m)):
            parents[m.text] = None
            frontier.append(m)
            if stop is not None and stop(m):
                return m, parents
    for _ in range(depth):
        nxt = []
        for x in frontier:
            for i in range(len(x.body)):
                room = max_body - len(x.body) + 1
                for t in sides:
                    if len(t.body) > room and _exact_size(x, t):
                        continue
                    r = resolve(x, i, t)
                    if r is None or len(r.body) > max_body or r.text in parents:
                        continue
                    if keep is not None and not keep(r):
                        continue
                    parents[r.text] = (x, i, t)
                    if limit is not None and len(parents) > limit:
                        raise ResourceGuardError(f"closure exceeded {limit} clauses")
                    nxt.append(r)
                    if stop is not None and stop(r):
                        return r, parents
        frontier = nxt
        if not frontier:
            break
    return None, parents


def closure(theory: Iterable[Metarule], depth: int, max_body: int,
            limit: int | None = CLOSURE_LIMIT) -> list[Metarule]:
    """Every clause of ``R^n(theory)`` for ``n <= depth`` with at most
    ``max_body`` body literals.  Resolvents above the bound are not expanded
    further.  More than ``limit`` clauses raises ResourceGuardError."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    base = _canonical_list(theory)
    from .clause import parse

    _, parents = _forward(base, depth, max_body, limit=limit)
    out = [parse(t) for t in parents]
    out.sort(key=lambda m: (len(m.body), m.text))
    return out


def _trace_from(parents: dict, m: Metarule) -> DerivationTrace:
    steps = []
    cur = m
    while parents[cur.text] is not None:
        x, i, t = parents[cur.text]
        steps.append(make_step(x, i, t))
        cur = x
    steps.reverse()
    return DerivationTrace(cur.text, steps)


def derives_k_forward(theory: Iterable[Metarule], c: Metarule, depth: int) -> DerivationTrace | None:
    """Reference search by plain forward closure."""
    c = c.canonical()
    base = _canonical_list(theory)
    pat = head_pattern(c.head)

    def keep(x):
        return pattern_generalizes(head_pattern(x.head), pat)

    found, parents = _forward(base, depth, len(c.body), keep=keep, stop=lambda x: x.text == c.text)
    if found is None:
        return None
    return _trace_from(parents, found)


def entails_k_forward(theory: Iterable[Metarule], c: Metarule, depth: int, slack: int = 0) -> bool:
    """Reference check by plain forward closure."""
    c = c.canonical()
    base = _canonical_list(theory)
    if is_tautology(c) or any(is_subsumed(t, c) for t in base):
        return True
    pat = head_pattern(c.head)

    def keep(x):
        return pattern_generalizes(head_pattern(x.head), pat)

    found, _ = _forward(base, depth, len(c.body) + slack, keep=keep,
                        stop=lambda x: is_subsumed(x, c))
    return found is not None


def _fast_ok(theory: Sequence[Metarule]) -> bool:
    return all(m.pred_distinct for m in theory)


def derives_k(theory: Iterable[Metarule], c: Metarule, depth: int) -> DerivationTrace | None:
    """A derivation of ``c`` from ``theory`` in at most ``depth`` resolution
    steps, or None.  Resolvents larger than ``c`` are never expanded."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    base = _canonical_list(theory)
    c = c.canonical()
    if _fast_ok(base):
        from .prover import Prover

        prover = Prover(base)
        if not prover.derivable(c, depth):
            return None
        return prover.derive(c, depth)
    return derives_k_forward(base, c, depth)


def entails_k(theory: Iterable[Metarule], c: Metarule, depth: int, slack: int = 0) -> bool:
    """True when ``c`` is a tautology, some theory clause subsumes it, or
    some clause derivable in at most ``depth`` steps with at most
    ``|body(c)| + slack`` body literals subsumes it.

    Theory clauses themselves are tried whatever their size, so subsumption
    by a member of the theory always counts as entailment.
    """
    if depth < 0 or slack < 0:
        raise ValueError("depth and slack must be nonnegative")
    base = _canonical_list(theory)
    c = c.canonical()
    if is_tautology(c) or any(is_subsumed(t, c) for t in base):
        return True
    if _fast_ok(base):
        from .prover import Prover

        return Prover(base).entails(c, depth, slack)
    return entails_k_forward(base, c, depth, slack)
