"""Metarule representation, text syntax and canonical forms.

A metarule is stored as a head literal and a tuple of body literals.  A
literal is a ``(pred, args)`` pair of small integers: ``pred`` indexes the
second-order variables of the clause and ``args`` the first-order ones.  The
two sorts live in separate namespaces and the sort of a variable is fixed by
the position it occupies, so no tagging is needed inside a literal.

Two metarules compare equal when they are alpha-equivalent; equality and
hashing go through the canonical text.
"""

from __future__ import annotations

import re
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

SECOND_ORDER = "so"
FIRST_ORDER = "fo"


class MetaruleSyntaxError(ValueError):
    pass


class SortError(ValueError):
    pass


class Literal(NamedTuple):
    pred: int
    args: tuple[int, ...]

    @property
    def arity(self) -> int:
        return len(self.args)


class Variable(NamedTuple):
    sort: str
    id: int


def _name_pool(letters: str, count: int) -> list[str]:
    names = []
    suffix = 0
    while len(names) < count:
        tag = "" if suffix == 0 else str(suffix)
        names.extend(ch + tag for ch in letters)
        suffix += 1
    return names[:count]


PRED_NAMES = _name_pool("PQRSTUVW", 256)
FO_NAMES = _name_pool("ABCDEFGHIJKLMNOPQRSTUVWXYZ", 1024)
# rank of each name in plain string order; comparing literals by rank tuples
# is the same as comparing their rendered text
_PRED_RANK = {n: i for i, n in enumerate(sorted(PRED_NAMES))}
PRED_RANK = [_PRED_RANK[n] for n in PRED_NAMES]
_FO_RANK = {n: i for i, n in enumerate(sorted(FO_NAMES))}
FO_RANK = [_FO_RANK[n] for n in FO_NAMES]
del _PRED_RANK, _FO_RANK


def _render_literal(lit: Literal, pnames: Sequence[str], fnames: Sequence[str]) -> str:
    name = pnames[lit.pred]
    if not lit.args:
        return name
    return name + "(" + ",".join(fnames[a] for a in lit.args) + ")"


def canonical_form_with_order(
    head: Literal, body: Iterable[Literal]
) -> tuple[Literal, tuple[Literal, ...], tuple[int, ...]]:
    """Canonical renaming and body order of an arbitrary clause.

    Variables are renumbered by first appearance (head first, then body in
    order).  Among all body orders the one with the smallest rendering,
    compared literal by literal, wins.  The search is a greedy descent that
    only branches when several literals render identically.

    The third component gives, for each canonical body literal, its index in
    the (duplicate free) input body.
    """
    lits = list(dict.fromkeys(body))
    pmap = {head.pred: 0}
    fmap: dict[int, int] = {}
    hargs = []
    for a in head.args:
        if a not in fmap:
            fmap[a] = len(fmap)
        hargs.append(fmap[a])
    chead = Literal(0, tuple(hargs))

    best: list | None = None

    def extend(lit, pm, fm):
        # rename lit under (pm, fm) extended with fresh ids; returns the
        # renamed literal and its rank key
        p = pm.get(lit.pred)
        if p is None:
            p = len(pm)
        nf = len(fm)
        local = {}
        args = []
        for a in lit.args:
            v = fm.get(a)
            if v is None:
                v = local.get(a)
                if v is None:
                    v = nf + len(local)
                    local[a] = v
            args.append(v)
        key = (PRED_RANK[p], *[FO_RANK[v] for v in args])
        return key, Literal(p, tuple(args))

    def search(remaining, pm, fm, acc, acc_keys, acc_idx):
        nonlocal best
        if not remaining:
            if best is None or acc_keys < best[0]:
                best = [list(acc_keys), list(acc), list(acc_idx)]
            return
        scored = [(extend(lit, pm, fm), j) for j, (_, lit) in enumerate(remaining)]
        low = min(s[0][0] for s in scored)
        if best is not None:
            pos = len(acc_keys)
            prefix = best[0][:pos]
            if prefix < acc_keys or (prefix == acc_keys and low > best[0][pos]):
                return
        for (key, newlit), j in scored:
            if key != low:
                continue
            orig, lit = remaining[j]
            pm2 = pm
            if lit.pred not in pm:
                pm2 = dict(pm)
                pm2[lit.pred] = newlit.pred
            fm2 = fm
            for a, v in zip(lit.args, newlit.args):
                if a not in fm2:
                    if fm2 is fm:
                        fm2 = dict(fm)
                    fm2[a] = v
            acc.append(newlit)
            acc_keys.append(key)
            acc_idx.append(orig)
            search(remaining[:j] + remaining[j + 1:], pm2, fm2, acc, acc_keys, acc_idx)
            acc.pop()
            acc_keys.pop()
            acc_idx.pop()

    search(list(enumerate(lits)), pmap, fmap, [], [], [])
    assert best is not None
    return chead, tuple(best[1]), tuple(best[2])


def canonical_form(
    head: Literal, body: Iterable[Literal]
) -> tuple[Literal, tuple[Literal, ...]]:
    h, b, _ = canonical_form_with_order(head, body)
    return h, b


def render_parts(head: Literal, body: Sequence[Literal]) -> str:
    """Text of an already canonical clause."""
    return (
        _render_literal(head, PRED_NAMES, FO_NAMES)
        + " :- "
        + ",".join(_render_literal(b, PRED_NAMES, FO_NAMES) for b in body)
        + "."
    )


def canonical_text(head: Literal, body: Iterable[Literal]) -> str:
    return render_parts(*canonical_form(head, body))


class Metarule:
    """A second-order definite clause with a nonempty body.

    The body is kept as given (duplicates removed); ``canonical()`` returns
    the alpha-normal representative.  Instances are immutable.
    """

    __slots__ = ("head", "body", "__dict__")

    def __init__(self, head: Literal, body: Iterable[Literal], _canonical: bool = False):
        body = tuple(dict.fromkeys(Literal(b[0], tuple(b[1])) for b in body))
        if not body:
            raise ValueError("metarule body must be nonempty")
        object.__setattr__(self, "head", Literal(head[0], tuple(head[1])))
        object.__setattr__(self, "body", body)
        if _canonical:
            self.__dict__["_canon"] = self

    def __setattr__(self, name, value):
        raise AttributeError("Metarule is immutable")

    @classmethod
    def from_canonical(cls, head: Literal, body: tuple[Literal, ...], text: str | None = None) -> "Metarule":
        m = cls(head, body, _canonical=True)
        if text is not None:
            m.__dict__["text"] = text
        return m

    @cached_property
    def _canon(self) -> "Metarule":
        h, b = canonical_form(self.head, self.body)
        return Metarule.from_canonical(h, b)

    def canonical(self) -> "Metarule":
        return self._canon

    @cached_property
    def text(self) -> str:
        c = self._canon
        return render_parts(c.head, c.body)

    def __eq__(self, other):
        if not isinstance(other, Metarule):
            return NotImplemented
        return self.text == other.text

    def __hash__(self):
        return hash(self.text)

    def __lt__(self, other: "Metarule"):
        return sort_key(self) < sort_key(other)

    def __repr__(self):
        return f"Metarule({self.text!r})"

    def __str__(self):
        return self.text

    @property
    def size(self) -> int:
        return len(self.body)

    def pred_vars(self) -> set[int]:
        return {self.head.pred, *(b.pred for b in self.body)}

    def fo_vars(self) -> set[int]:
        out = set(self.head.args)
        for b in self.body:
            out.update(b.args)
        return out

    def variables(self) -> set[Variable]:
        return {Variable(SECOND_ORDER, p) for p in self.pred_vars()} | {
            Variable(FIRST_ORDER, v) for v in self.fo_vars()
        }

    def arities(self) -> set[int]:
        return {self.head.arity, *(b.arity for b in self.body)}

    @cached_property
    def pred_distinct(self) -> bool:
        """Every literal, head included, has its own predicate variable."""
        return len(self.pred_vars()) == len(self.body) + 1


def sort_key(m: Metarule) -> tuple[int, str]:
    """Output order used everywhere: body size, then canonical text."""
    return (len(m.body), m.text)


# --- text syntax ---------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(:-|<-|←)|([A-Za-z_][A-Za-z0-9_]*)|([(),.]))")


def _tokenize(text: str) -> list[str]:
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise MetaruleSyntaxError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        tok = m.group(1) or m.group(2) or m.group(3)
        out.append(":-" if m.group(1) else tok)
        pos = m.end()
    return out


def parse(text: str) -> Metarule:
    """Parse ``P(A,B) :- Q(A,C),R(C,B).`` into a canonical metarule."""
    toks = _tokenize(text)
    i = 0
    preds: dict[str, int] = {}
    fos: dict[str, int] = {}

    def peek():
        return toks[i] if i < len(toks) else None

    def literal():
        nonlocal i
        name = peek()
        if name is None or not (name[0].isalpha() or name[0] == "_"):
            raise MetaruleSyntaxError(f"expected a literal in {text!r}")
        if name in fos:
            raise SortError(f"{name} used both as predicate and argument variable")
        i += 1
        p = preds.setdefault(name, len(preds))
        args = []
        if peek() == "(":
            i += 1
            while True:
                a = peek()
                if a is None or not (a[0].isalpha() or a[0] == "_"):
                    raise MetaruleSyntaxError(f"expected an argument variable in {text!r}")
                if not (a[0].isupper() or a[0] == "_"):
                    raise MetaruleSyntaxError(f"argument {a!r} is not a first-order variable")
                if a in preds:
                    raise SortError(f"{a} used both as predicate and argument variable")
                i += 1
                if peek() == "(":
                    raise MetaruleSyntaxError(f"argument {a!r} is not a first-order variable")
                args.append(fos.setdefault(a, len(fos)))
                if peek() == ",":
                    i += 1
                    continue
                if peek() == ")":
                    i += 1
                    break
                raise MetaruleSyntaxError(f"malformed argument list in {text!r}")
        return Literal(p, tuple(args))

    head = literal()
    if peek() in (None, "."):
        raise MetaruleSyntaxError(f"facts are not metarules: {text!r}")
    if peek() != ":-":
        raise MetaruleSyntaxError(f"expected ':-' in {text!r}")
    i += 1
    body = [literal()]
    while peek() == ",":
        i += 1
        body.append(literal())
    if peek() == ".":
        i += 1
    if i != len(toks):
        raise MetaruleSyntaxError(f"trailing input in {text!r}")
    # a name may not switch sort after first use
    clash = set(preds) & set(fos)
    if clash:
        raise SortError(f"{sorted(clash)} used with both sorts")
    return Metarule(head, body).canonical()


def render(m: Metarule) -> str:
    return m.text


def canonicalize(m: Metarule) -> Metarule:
    return m.canonical()


def alpha_equal(a: Metarule, b: Metarule) -> bool:
    return a.text == b.text


def apply_substitution(m: Metarule, subst: Mapping[Variable, Variable]) -> Metarule:
    """Apply a sort-preserving variable mapping; identical literals collapse."""
    pmap: dict[int, int] = {}
    fmap: dict[int, int] = {}
    for src, dst in subst.items():
        src, dst = Variable(*src), Variable(*dst)
        if src.sort != dst.sort:
            raise SortError(f"substitution maps {src} to {dst}")
        (pmap if src.sort == SECOND_ORDER else fmap)[src.id] = dst.id

    def sub(lit):
        return Literal(pmap.get(lit.pred, lit.pred), tuple(fmap.get(a, a) for a in lit.args))

    return Metarule(sub(m.head), [sub(b) for b in m.body])


def encapsulate(m: Metarule) -> str:
    """First-order ``enc/N`` rendering of the canonical clause."""
    c = m.canonical()

    def enc(lit):
        parts = [PRED_NAMES[lit.pred], *(FO_NAMES[a] for a in lit.args)]
        return "enc(" + ",".join(parts) + ")"

    return enc(c.head) + " :- " + ",".join(enc(b) for b in c.body) + "."
