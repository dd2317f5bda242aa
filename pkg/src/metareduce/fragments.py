"""Fragment membership and exhaustive enumeration of metarule fragments."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator

from .clause import Literal, Metarule, canonical_form, render_parts, sort_key

CONSTRAINTS = ("connected", "datalog", "singleton-free", "duplicate-free", "none")
# single-letter names used for the fragments in the literature
CONSTRAINT_LETTERS = {
    "connected": "C",
    "datalog": "D",
    "singleton-free": "K",
    "duplicate-free": "U",
    "none": "M",
}

MAX_ENUM_BODY = 6
MAX_ENUM_ARITY = 3


class ResourceGuardError(RuntimeError):
    """A configured size or time guard was exceeded."""


@dataclass(frozen=True)
class FragmentSpec:
    arities: frozenset[int]
    max_body: int
    constraint: str = "connected"

    def __post_init__(self):
        object.__setattr__(self, "arities", frozenset(self.arities))
        if not self.arities:
            raise ValueError("arity set must be nonempty")
        if any(a < 0 for a in self.arities):
            raise ValueError("arities must be natural numbers")
        if self.max_body < 1:
            raise ValueError("max_body must be at least 1")
        if self.constraint not in CONSTRAINTS:
            raise ValueError(f"unknown constraint {self.constraint!r}")

    @property
    def name(self) -> str:
        ar = ",".join(str(a) for a in sorted(self.arities))
        return f"{CONSTRAINT_LETTERS[self.constraint]}{{{ar}}}{self.max_body}"

    def with_max_body(self, m: int) -> "FragmentSpec":
        return FragmentSpec(self.arities, m, self.constraint)


def is_connected(m: Metarule) -> bool:
    """Every variable-bearing body literal reaches the head through shared
    first-order variables.  Zero-arity body literals are ignored.
    """
    pending = [b for b in m.body if b.args]
    seen = set(m.head.args)
    changed = True
    while pending and changed:
        changed = False
        rest = []
        for b in pending:
            if seen.intersection(b.args):
                seen.update(b.args)
                changed = True
            else:
                rest.append(b)
        pending = rest
    return not pending


def is_datalog(m: Metarule) -> bool:
    in_body = set()
    for b in m.body:
        in_body.update(b.args)
    return set(m.head.args) <= in_body


def _occurrences(m: Metarule) -> Counter:
    c = Counter(m.head.args)
    for b in m.body:
        c.update(b.args)
    return c


def is_singleton_free(m: Metarule) -> bool:
    return all(n >= 2 for n in _occurrences(m).values())


def _has_repeat(lit: Literal) -> bool:
    return len(set(lit.args)) != len(lit.args)


def is_duplicate_free(m: Metarule) -> bool:
    if _has_repeat(m.head) or any(_has_repeat(b) for b in m.body):
        return False
    return is_singleton_free(m)


def satisfies(constraint: str, m: Metarule) -> bool:
    """Constraint test including the implied weaker constraints."""
    if constraint == "none":
        return True
    if not is_connected(m):
        return False
    if constraint == "connected":
        return True
    if not is_datalog(m):
        return False
    if constraint == "datalog":
        return True
    if constraint == "singleton-free":
        return is_singleton_free(m)
    if constraint == "duplicate-free":
        return is_duplicate_free(m)
    raise ValueError(f"unknown constraint {constraint!r}")


def in_fragment(spec: FragmentSpec, m: Metarule) -> bool:
    if not 1 <= len(m.body) <= spec.max_body:
        return False
    if not m.arities() <= spec.arities:
        return False
    return satisfies(spec.constraint, m)


# --- enumeration ---------------------------------------------------------

def _arg_patterns(arity: int, nvars: int) -> Iterator[tuple[int, ...]]:
    """Argument tuples over ``nvars`` existing variables plus fresh ones,
    fresh variables introduced in increasing order."""

    def rec(prefix, top):
        if len(prefix) == arity:
            yield tuple(prefix)
            return
        for v in range(top + 1):
            prefix.append(v)
            yield from rec(prefix, max(top, v + 1) if v == top else top)
            prefix.pop()

    yield from rec([], nvars)


def enumerate_fragment(spec: FragmentSpec, *, max_body_guard: int = MAX_ENUM_BODY,
                       max_arity_guard: int = MAX_ENUM_ARITY) -> list[Metarule]:
    """All metarules of the fragment up to variable renaming.

    Every literal carries its own second-order variable.  Clauses are grown
    one body literal at a time from canonical parents; a connected clause
    always has a body literal whose removal keeps it connected, so growing
    the connected fragment and filtering the stronger constraints at the
    end reaches every member.
    """
    if spec.max_body > max_body_guard or max(spec.arities) > max_arity_guard:
        raise ResourceGuardError(
            f"fragment {spec.name} exceeds enumeration guard "
            f"(max body {max_body_guard}, max arity {max_arity_guard})"
        )
    connected = spec.constraint != "none"
    arities = sorted(spec.arities)

    level: dict[str, tuple[Literal, tuple[Literal, ...]]] = {}
    heads = []
    for h in arities:
        heads.extend(Literal(0, args) for args in _arg_patterns(h, 0))
    for head in heads:
        nv = len(set(head.args))
        for a in arities:
            for args in _arg_patterns(a, nv):
                lit = Literal(1, args)
                if connected and args and not set(args) & set(head.args):
                    continue
                ch, cb = canonical_form(head, (lit,))
                level.setdefault(render_parts(ch, cb), (ch, cb))

    out: list[Metarule] = []
    for size in range(1, spec.max_body + 1):
        for text, (h, b) in level.items():
            m = Metarule.from_canonical(h, b, text)
            if satisfies(spec.constraint, m):
                out.append(m)
        if size == spec.max_body:
            break
        nxt: dict[str, tuple[Literal, tuple[Literal, ...]]] = {}
        for h, b in level.values():
            varset = set(h.args)
            for lit in b:
                varset.update(lit.args)
            nv = len(varset)
            fresh_pred = len(b) + 1
            for a in arities:
                for args in _arg_patterns(a, nv):
                    if connected and args and min(args) >= nv:
                        continue
                    ch, cb = canonical_form(h, b + (Literal(fresh_pred, args),))
                    if len(cb) != size + 1:
                        continue
                    text = render_parts(ch, cb)
                    if text not in nxt:
                        nxt[text] = (ch, cb)
        level = nxt
    out.sort(key=sort_key)
    return out


def count_fragment(spec: FragmentSpec) -> int:
    return len(enumerate_fragment(spec))
