"""Reduction drivers: remove redundant clauses from a theory.

A single pass over the candidates in a fixed order is the same as restarting
the scan after every removal: redundancy only gets harder as the theory
shrinks, so a clause found irredundant earlier stays irredundant.

With a depth bound the pass alone is not enough.  A clause removed because
it had a short derivation through some clause that is removed later may
need more steps than the bound allows from what is finally kept.  After the
pass every removed clause is checked against the kept set; the ones that
lost their support are pinned and the pass is repeated until nothing is
unsupported.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

from . import __version__
from .clause import Metarule, sort_key
from .fragments import FragmentSpec, ResourceGuardError, in_fragment
from .prover import Prover, split_depth, split_derivation
from .resolution import derives_k_forward, entails_k_forward
from .subsumption import head_pattern, is_subsumed, is_tautology, pattern_generalizes

RELATIONS = ("S", "E", "D")
ORDER_POLICIES = ("size-desc", "given")


class ReductionTimeout(ResourceGuardError):
    pass


@dataclass(frozen=True)
class ReductionRelation:
    kind: str
    depth: int = 7
    slack: int = 0

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in RELATIONS:
            raise ValueError(f"unknown relation {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.depth < 0 or self.slack < 0:
            raise ValueError("depth and slack must be nonnegative")

    def __str__(self):
        return self.kind if self.kind == "S" else f"{self.kind}{self.depth}"


def _as_relation(rel) -> ReductionRelation:
    return rel if isinstance(rel, ReductionRelation) else ReductionRelation(str(rel))


class Checker:
    """Redundancy tests against a theory that shrinks over time.

    Clauses can be switched off and on again, which is how a candidate is
    excluded from its own test.  Theories in which some clause reuses a
    predicate variable are handled by the plain forward search.
    """

    def __init__(self, theory: Sequence[Metarule], rel: ReductionRelation):
        self.rel = rel
        self.probe: Prover | None = None
        self.clauses = sorted({m.canonical() for m in theory}, key=sort_key)
        self.active = {m.text: True for m in self.clauses}
        self._pats = {m.text: head_pattern(m.head) for m in self.clauses}
        self._arities = {m.text: frozenset(len(b.args) for b in m.body) for m in self.clauses}
        self.fast = all(m.pred_distinct for m in self.clauses)
        self._head_arities = {len(m.head.args) for m in self.clauses}
        self.prover = Prover(self.clauses) if self.fast and rel.kind != "S" else None

    def set_active(self, m: Metarule, flag: bool) -> None:
        self.active[m.text] = flag
        if self.prover is not None:
            self.prover.set_active(m, flag)

    def current(self) -> list[Metarule]:
        return [m for m in self.clauses if self.active[m.text]]

    def subsumed(self, c: Metarule) -> bool:
        pat = head_pattern(c.head)
        ar = frozenset(len(b.args) for b in c.body)
        for m in self.clauses:
            if not self.active[m.text]:
                continue
            if not self._arities[m.text] <= ar or not pattern_generalizes(self._pats[m.text], pat):
                continue
            if is_subsumed(m, c):
                return True
        return False

    def redundant(self, c: Metarule) -> bool:
        """Is ``c`` redundant in the active theory (which must not contain it)?"""
        kind, depth, slack = self.rel.kind, self.rel.depth, self.rel.slack
        if kind == "S":
            return self.subsumed(c)
        if kind == "E":
            if is_tautology(c) or self.subsumed(c):
                return True
            if self.probe is not None and self._probe(c):
                return True
            if self.fast:
                return self.prover.entails(c, depth, slack)
            return entails_k_forward(self.current(), c, depth, slack)
        if self.fast:
            if depth >= 1 and split_derivation(c, self._present, self._head_arities):
                return True
            if self.probe is not None and self._probe(c):
                return True
            return self.prover.derivable(c, depth)
        return derives_k_forward(self.current(), c, depth) is not None

    def _present(self, text: str) -> bool:
        return self.active.get(text, False)

    def _probe(self, c: Metarule) -> bool:
        # the probe holds a subset of the active theory, so success is final
        if self.rel.kind == "E":
            return self.probe.entails(c, self.rel.depth, self.rel.slack)
        return self.probe.derivable(c, self.rel.depth)


def is_redundant(theory: Iterable[Metarule], c: Metarule, rel) -> bool:
    rel = _as_relation(rel)
    c = c.canonical()
    theory = [m for m in theory if m.canonical() != c]
    return Checker(theory, rel).redundant(c)


def _ordered(theory: Iterable[Metarule], order: str) -> list[Metarule]:
    if order not in ORDER_POLICIES:
        raise ValueError(f"unknown order policy {order!r}")
    seen: dict[str, Metarule] = {}
    for m in theory:
        c = m.canonical()
        seen.setdefault(c.text, c)
    items = list(seen.values())
    if order == "size-desc":
        items.sort(key=lambda m: (-len(m.body), m.text))
    return items


@dataclass
class ReductionReport:
    input: str
    relation: str
    depth: int
    slack: int
    order: str
    input_count: int
    kept: list[str]
    removed_count: int
    removal_order: list[str]
    duration_ms: float
    version: str = __version__
    validity: dict | None = None
    restored: list[str] = field(default_factory=list)
    repaired: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def kept_text(self) -> str:
        return "".join(k + "\n" for k in self.kept)


def _check_deadline(deadline, what: str) -> None:
    if deadline is not None and time.monotonic() > deadline:
        raise ReductionTimeout(f"reduction timed out {what}")


def _scan(items, rel, probing, cache, deadline, progress=None, pinned=frozenset()):
    """One pass over ``items``, never removing a ``pinned`` clause.  With
    ``probing`` (descending body size) every clause smaller than the
    candidate is still in the theory, so the reduction of those smaller
    clauses can be tried first as a cheap sufficient test; ``cache`` holds
    these reductions by size bound."""
    checker = Checker(items, rel)
    probing = probing and checker.fast and rel.kind != "S"
    removed: list[str] = []
    if len(items) < 2:
        return checker, removed
    level = None
    for i, c in enumerate(items):
        _check_deadline(deadline, f"after {i} candidates")
        if c.text in pinned:
            continue
        size = len(c.body)
        if probing and size != level:
            level = size
            checker.probe = _probe_for(items, size, rel, cache, deadline)
        checker.set_active(c, False)
        if checker.redundant(c):
            removed.append(c.text)
        else:
            checker.set_active(c, True)
        if progress is not None:
            progress(i + 1, len(items))
    return checker, removed


def _probe_for(items, size, rel, cache, deadline):
    smaller = [m for m in items if len(m.body) < size]
    if len(smaller) == len(items) or not smaller:
        return None
    if size not in cache:
        kept = _scan(smaller, rel, True, cache, deadline)[0].current()
        cache[size] = Prover(kept)
    return cache[size]


def reduce_with_report(
    theory: Iterable[Metarule],
    rel,
    *,
    order: str = "size-desc",
    timeout: float | None = None,
    description: str = "theory",
    progress: Callable[[int, int], None] | None = None,
    repair: bool = True,
) -> ReductionReport:
    """Redundancy elimination with an explicit scan order.

    ``size-desc`` tries the largest clauses first (ties by canonical text),
    ``given`` keeps the order of the input.  With ``repair`` off the result
    is that of the plain pass, whose removed clauses may not all be
    redundant with respect to the kept ones.
    """
    rel = _as_relation(rel)
    start = time.monotonic()
    deadline = start + timeout if timeout else None
    items = _ordered(theory, order)
    probing = order == "size-desc"
    pinned: set[str] = set()
    if repair and rel.kind == "D" and all(m.pred_distinct for m in items):
        current, removed, pinned = _derivation_levels(items, rel, deadline, progress)
    else:
        cache: dict = {}
        checker, removed = _scan(items, rel, probing, cache, deadline, progress)
        # subsumption is transitive, so the plain pass is already valid for S
        if repair and rel.kind != "S":
            by_text = {m.text: m for m in items}
            while True:
                bad = unsupported(checker.current(), [by_text[t] for t in removed], rel,
                                  deadline=deadline)
                if not bad:
                    break
                pinned.update(m.text for m in bad)
                checker, removed = _scan(items, rel, probing, cache, deadline, progress, pinned)
            _tidy(checker, removed, pinned, by_text, rel, deadline)
        current = checker.current()
    kept = sorted(current, key=sort_key)
    return ReductionReport(
        input=description,
        relation=rel.kind,
        depth=rel.depth,
        slack=rel.slack,
        order=order,
        input_count=len(items),
        kept=[m.text for m in kept],
        removed_count=len(removed),
        removal_order=removed,
        duration_ms=round((time.monotonic() - start) * 1000, 3),
        restored=[m.text for m in kept if m.text in pinned],
        repaired=repair and rel.kind != "S",
    )


def _derivation_levels(items, rel, deadline, progress):
    """Derivation reduction one body size at a time.

    With distinct predicate variables a resolvent is never smaller than
    either parent, so a clause can only be derived from clauses no larger
    than itself and the kept clauses of the smaller sizes are final by the
    time a size is reached.  Clauses derivable from those alone go at
    once; the rest of the size are settled among themselves in scan order.
    Returns the kept clauses, the removed texts and the pinned texts.
    """
    depth = rel.depth
    arities = {len(m.head.args) for m in items}
    levels: dict[int, list[Metarule]] = {}
    for m in items:
        levels.setdefault(len(m.body), []).append(m)
    kept: list[Metarule] = []
    removed: list[str] = []
    pinned: set[str] = set()
    # fewest steps known to derive a clause from the kept ones
    known: dict[str, int] = {}
    done = 0
    for size in sorted(levels):
        base = Prover(kept)
        rest = []
        for c in levels[size]:
            _check_deadline(deadline, f"after {done} candidates")
            d = split_depth(c, known, arities, depth) if depth >= 1 else None
            if d is None:
                d = base.min_depth(c, depth)
            if d is None:
                rest.append(c)
            else:
                known[c.text] = d
                removed.append(c.text)
            done += 1
            if progress is not None:
                progress(done, len(items))
        stay, gone, pins = _settle(kept, rest, rel, deadline)
        kept.extend(stay)
        known.update((m.text, 0) for m in stay)
        removed.extend(gone)
        pinned.update(pins)
    return kept, removed, pinned


def _settle(base, rest, rel, deadline):
    """Scan ``rest`` with ``base`` fixed, pinning removed clauses that lose
    their support until none does.  Returns (kept, removed, pinned)."""
    pinned: set[str] = set()
    while True:
        checker = Checker(base + rest, rel)
        removed = []
        for c in rest:
            _check_deadline(deadline, "while settling a level")
            if c.text in pinned:
                continue
            checker.set_active(c, False)
            if checker.redundant(c):
                removed.append(c)
            else:
                checker.set_active(c, True)
        bad = [c.text for c in removed if not checker.redundant(c)]
        if not bad:
            break
        pinned.update(bad)
    for c in rest:
        if c.text not in pinned:
            continue
        checker.set_active(c, False)
        if checker.redundant(c) and all(checker.redundant(r) for r in removed):
            removed.append(c)
        else:
            checker.set_active(c, True)
    stay = [c for c in rest if checker.active[c.text]]
    return stay, [c.text for c in removed], {t for t in pinned if checker.active[t]}


def _tidy(checker, removed, pinned, by_text, rel, deadline) -> None:
    """Drop pinned clauses that later pins made redundant, as long as every
    removed clause keeps its support."""
    checker.probe = None
    for t in sorted(pinned, key=lambda t: (-len(by_text[t].body), t)):
        _check_deadline(deadline, "while tidying")
        m = by_text[t]
        checker.set_active(m, False)
        if checker.redundant(m) and not unsupported(
                checker.current(), [by_text[r] for r in removed], rel, deadline=deadline):
            removed.append(t)
        else:
            checker.set_active(m, True)


def unsupported(kept: Iterable[Metarule], candidates: Iterable[Metarule], rel, *,
                deadline: float | None = None) -> list[Metarule]:
    """The candidates outside ``kept`` that are not redundant with respect
    to ``kept``, smallest first."""
    rel = _as_relation(rel)
    checker = Checker(list(kept), rel)
    cands = sorted({m.canonical() for m in candidates} - set(checker.clauses), key=sort_key)
    out = []
    if rel.kind == "D" and checker.fast and cands:
        # a clause that splits into two pieces with short enough known
        # derivations is derivable within the bound; every other clause
        # gets its exact fewest steps from the prover
        known = {m.text: 0 for m in checker.clauses}
        arities = checker._head_arities | {len(m.head.args) for m in cands}
        for c in cands:
            _check_deadline(deadline, "while checking support")
            d = split_depth(c, known, arities, rel.depth) if rel.depth >= 1 else None
            if d is None:
                d = checker.prover.min_depth(c, rel.depth)
            if d is None:
                out.append(c)
            else:
                known[c.text] = d
        return out
    for c in cands:
        _check_deadline(deadline, "while checking support")
        if not checker.redundant(c):
            out.append(c)
    return out


def reduce(theory: Iterable[Metarule], rel, *, order: str = "size-desc",
           timeout: float | None = None, repair: bool = True) -> list[Metarule]:
    """The kept clauses, sorted by body size then canonical text."""
    from .clause import parse

    report = reduce_with_report(theory, rel, order=order, timeout=timeout, repair=repair)
    return [parse(t) for t in report.kept]


def mreduce(theory: Iterable[Metarule], rel, target: FragmentSpec, *,
            order: str = "size-desc", timeout: float | None = None,
            repair: bool = True) -> list[Metarule] | None:
    """Reduce to the part of the theory inside ``target``.

    Returns None when some clause outside the target is not redundant with
    respect to the clauses inside it.
    """
    rel = _as_relation(rel)
    items = _ordered(theory, order)
    inside = [m for m in items if in_fragment(target, m)]
    outside = [m for m in items if not in_fragment(target, m)]
    checker = Checker(inside, rel)
    for c in outside:
        if not checker.redundant(c):
            return None
    return reduce(inside, rel, order=order, timeout=timeout, repair=repair)


@dataclass
class ValidityResult:
    unsupported: list[str] = field(default_factory=list)
    redundant_kept: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.unsupported and not self.redundant_kept

    def to_dict(self) -> dict:
        return {"ok": self.ok, "unsupported": self.unsupported, "redundant_kept": self.redundant_kept}


def check_validity(theory: Iterable[Metarule], kept: Iterable[Metarule], rel) -> ValidityResult:
    """Every input clause outside ``kept`` must be redundant with respect to
    ``kept`` and no kept clause may be redundant with respect to the others."""
    rel = _as_relation(rel)
    kept = [m.canonical() for m in kept]
    checker = Checker(kept, rel)
    out = ValidityResult()
    out.unsupported = [m.text for m in unsupported(kept, theory, rel)]
    for m in kept:
        checker.set_active(m, False)
        if checker.redundant(m):
            out.redundant_kept.append(m.text)
        checker.set_active(m, True)
    return out
