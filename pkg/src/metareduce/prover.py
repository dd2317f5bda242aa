"""Goal directed search for bounded derivability and entailment.

Only valid for theories whose clauses give every literal its own predicate
variable.  Under that condition every resolvent has the same property, no
two body literals ever coincide, and the predicate variables impose no
constraint at all: each occurs exactly once and can be renamed freely.  The
search therefore works on first-order argument structure only.

The question "is some D in R^k(T) with at most B body literals a subsumer
of c" becomes a top-down proof: skolemize c, use its body atoms as facts and
prove its head atom with at most k+1 clause applications and at most B fact
leaves.  Every such proof tree linearizes into a derivation of the clause D
formed by its root head and its leaves, and vice versa.

For derivability the leaves must use every fact exactly once and the final
assignment of variables to skolem constants must be injective, so that D is
a renaming of c rather than a generalization of it.  Bindings made by
unification (the most general unifiers of the derivation) are kept apart
from bindings to constants so that this can be checked.
"""

from __future__ import annotations

from itertools import product
from typing import Callable, Iterable, Mapping, Sequence

from .clause import Literal, Metarule, canonical_form_with_order, canonical_text
from .resolution import DerivationTrace, make_step, resolve_parts


class _Clause:
    __slots__ = ("head", "body", "size", "nvars", "rule", "active")

    def __init__(self, rule: Metarule):
        self.rule = rule
        self.active = True
        self.head = rule.head.args
        self.body = tuple(b.args for b in rule.body)
        self.size = len(self.body)
        self.nvars = max(rule.fo_vars(), default=-1) + 1


class SearchLimit(Exception):
    """Raised when the node budget of a single query is exhausted."""


class Prover:
    def __init__(self, theory: Sequence[Metarule], node_limit: int | None = None):
        self.clauses = [_Clause(m.canonical()) for m in theory]
        for c in self.clauses:
            if not c.rule.pred_distinct:
                raise ValueError(f"prover needs distinct predicate variables: {c.rule.text}")
        self.clauses.sort(key=lambda c: (c.size, c.rule.text))
        self.by_arity: dict[int, list[_Clause]] = {}
        self.index: dict[str, _Clause] = {}
        for c in self.clauses:
            self.by_arity.setdefault(len(c.head), []).append(c)
            self.index[c.rule.text] = c
        self.node_limit = node_limit
        self.nodes = 0

    def set_active(self, m: Metarule, flag: bool) -> None:
        """Switch a theory clause on or off without rebuilding the indexes."""
        self.index[m.text].active = flag

    # --- variable store ------------------------------------------------
    # parent[] is the union-find of unifier bindings, const[] the binding of
    # a class root to a skolem constant (-1 when free)

    def _reset(self):
        self.parent: list[int] = []
        self.const: list[int] = []
        self.trail: list[tuple[int, int]] = []

    def _alloc(self, n: int) -> int:
        base = len(self.parent)
        self.parent.extend(range(base, base + n))
        self.const.extend([-1] * n)
        return base

    def _free(self, base: int) -> None:
        del self.parent[base:]
        del self.const[base:]

    def _find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            x = p[x]
        return x

    def _union(self, a: int, b: int) -> bool:
        ra, rb = self._find(a), self._find(b)
        if ra == rb:
            return True
        ca, cb = self.const[ra], self.const[rb]
        if ca >= 0 and cb >= 0 and ca != cb:
            return False
        self.parent[rb] = ra
        self.trail.append((0, rb))
        if ca < 0 and cb >= 0:
            self.const[ra] = cb
            self.trail.append((1, ra))
        return True

    def _bind(self, a: int, k: int) -> bool:
        r = self._find(a)
        c = self.const[r]
        if c >= 0:
            return c == k
        self.const[r] = k
        self.trail.append((1, r))
        return True

    def _undo(self, mark: int) -> None:
        t = self.trail
        while len(t) > mark:
            kind, x = t.pop()
            if kind == 0:
                self.parent[x] = x
            else:
                self.const[x] = -1

    def _tick(self):
        self.nodes += 1
        if self.node_limit is not None and self.nodes > self.node_limit:
            raise SearchLimit()

    # --- common pieces -------------------------------------------------

    def _skolemize(self, c: Metarule):
        ids: dict[int, int] = {}
        for a in c.head.args:
            ids.setdefault(a, len(ids))
        for b in c.body:
            for a in b.args:
                ids.setdefault(a, len(ids))
        head = tuple(ids[a] for a in c.head.args)
        facts = [tuple(ids[a] for a in b.args) for b in c.body]
        return head, facts, len(ids)

    def _select(self, goals):
        best_i, best_s = 0, -1
        for i, (_, args) in enumerate(goals):
            if not args:
                return i
            s = 0
            for a in args:
                if self.const[self._find(a)] >= 0:
                    s += 1
            s = s * 4 - len(args)
            if s > best_s:
                best_i, best_s = i, s
        return best_i

    def _expand(self, goal_args, clause: _Clause):
        """Rename ``clause`` apart and unify its head with the goal.  Returns
        the base of the fresh variables or None on failure (state restored)."""
        mark = len(self.trail)
        base = self._alloc(clause.nvars)
        for g, h in zip(goal_args, clause.head):
            if not self._union(g, base + h):
                self._undo(mark)
                self._free(base)
                return None
        return base

    def _key(self, goals):
        names: dict[int, int] = {}
        out = []
        for _, args in goals:
            enc = []
            for a in args:
                r = self._find(a)
                k = self.const[r]
                if k >= 0:
                    enc.append(-1 - k)
                else:
                    enc.append(names.setdefault(r, len(names)))
            out.append(tuple(enc))
        return tuple(out)

    # --- entailment ------------------------------------------------------

    def entails(self, c: Metarule, depth: int, slack: int = 0) -> bool:
        """Some clause in R^depth(T) with at most |body(c)|+slack literals
        subsumes c (c is assumed not to be a tautology)."""
        head, facts, _ = self._skolemize(c.canonical())
        bound = len(c.body) + slack
        facts_by_arity: dict[int, list[tuple[int, ...]]] = {}
        for f in dict.fromkeys(facts):
            facts_by_arity.setdefault(len(f), []).append(f)
        self.nodes = 0
        failed: dict = {}

        def search(goals, uses, leaves):
            if not goals:
                return True
            key = (self._key(goals), leaves)
            if failed.get(key, -1) >= uses:
                return False
            self._tick()
            i = self._select(goals)
            _, args = goals[i]
            rest = goals[:i] + goals[i + 1:]
            for f in facts_by_arity.get(len(args), ()):
                mark = len(self.trail)
                if all(self._bind(a, k) for a, k in zip(args, f)):
                    if search(rest, uses, leaves + 1):
                        return True
                self._undo(mark)
            if uses > 0:
                room = bound - leaves - len(goals) + 1
                for cl in self.by_arity.get(len(args), ()):
                    if cl.size > room:
                        break
                    if not cl.active:
                        continue
                    mark = len(self.trail)
                    base = self._expand(args, cl)
                    if base is None:
                        continue
                    new = rest + [(None, tuple(base + x for x in b)) for b in cl.body]
                    if search(new, uses - 1, leaves):
                        return True
                    self._undo(mark)
                    self._free(base)
            k2 = self._key(goals), leaves
            if failed.get(k2, -1) < uses:
                failed[k2] = uses
            return False

        for limit in range(depth + 1):
            self._reset()
            root = self._alloc(len(head))
            if not all(self._bind(root + i, k) for i, k in enumerate(head)):
                return False
            root_args = tuple(root + i for i in range(len(head)))
            for cl in self.by_arity.get(len(head), ()):
                if cl.size > bound:
                    break
                if not cl.active:
                    continue
                mark = len(self.trail)
                base = self._expand(root_args, cl)
                if base is None:
                    continue
                goals = [(None, tuple(base + x for x in b)) for b in cl.body]
                if search(goals, limit, 0):
                    return True
                self._undo(mark)
                self._free(base)
        return False

    # --- derivability, decided over fact subsets -----------------------------

    def derivable(self, c: Metarule, depth: int) -> bool:
        """Decide whether c is in R^depth(T) without building a trace."""
        return self.min_depth(c, depth) is not None

    def min_depth(self, c: Metarule, depth: int) -> int | None:
        """Fewest resolution steps deriving c, if at most ``depth``.

        A derivation is a proof tree of clause applications whose leaves are
        exactly the body atoms of c.  ``sub(t, F, b)`` answers, for a goal
        whose arguments carry the skolem constants ``t`` (None for a variable
        that never reaches a leaf), whether a subtree with at most ``b``
        applications has leaf set ``F``.  It returns the possible ways the
        subtree merges the goal's arguments, each with its fewest uses.

        Injectivity is kept local: a variable class that does not reach the
        goal arguments owns its constant, so that constant must not be
        passed in, must not be a head constant of c and must not occur in any
        fact outside F.
        """
        c = c.canonical()
        if not c.pred_distinct:
            return None
        head, facts, nconst = self._skolemize(c)
        n = len(facts)
        occ = [0] * nconst
        for j, f in enumerate(facts):
            for k in f:
                occ[k] |= 1 << j
        head_consts = set(head)
        consts_of: dict[int, tuple[int, ...]] = {}

        def consts(mask):
            r = consts_of.get(mask)
            if r is None:
                r = consts_of[mask] = tuple(k for k in range(nconst) if occ[k] & mask)
            return r

        def closed(t, mask):
            # constants not passed in must live entirely inside the subtree
            vals = set(t)
            for k in consts(mask):
                if k not in vals and (k in head_consts or occ[k] & ~mask):
                    return False
            return True

        memo: dict = {}

        def sub(t, mask, b, leaf=True):
            key = (t, mask, b, leaf)
            r = memo.get(key)
            if r is not None:
                return r
            r = memo[key] = {}
            self._tick()
            if not closed(t, mask):
                return r
            if leaf and mask & (mask - 1) == 0 and facts[mask.bit_length() - 1] == t:
                r[tuple(range(len(t)))] = 0
            if b == 0:
                return r
            size = bin(mask).count("1")
            dom = (None, *sorted(set(consts(mask)) | {k for k in t if k is not None}))
            for cl in self.by_arity.get(len(t), ()):
                if cl.size > size:
                    break
                if cl.active:
                    self._apply(cl, t, mask, b, dom, sub, head_consts, occ, consts, r)
            return r

        self.nodes = 0
        root = sub(tuple(head), (1 << n) - 1, depth + 1, leaf=False)
        best = None
        for pi, uses in root.items():
            if all(pi[i] == pi[j] for i in range(len(head)) for j in range(i)
                   if head[i] == head[j]):
                if best is None or uses - 1 < best:
                    best = uses - 1
        return best

    def _apply(self, cl, t, mask, b, dom, sub, head_consts, occ, consts, out):
        val: list = [None] * cl.nvars
        fixed = [False] * cl.nvars
        for v, k in zip(cl.head, t):
            if fixed[v] and val[v] != k:
                return
            val[v], fixed[v] = k, True
        body = cl.body
        nb = len(body)
        vals_t = set(t)
        merges: list[tuple[int, int]] = []

        def finish(uses):
            parent = list(range(cl.nvars))

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for a, b2 in merges:
                ra, rb = find(a), find(b2)
                if ra != rb:
                    parent[rb] = ra
            head_roots = {find(v) for v in cl.head}
            owned = set()
            seen_roots = set()
            for v in range(cl.nvars):
                r = find(v)
                if r in head_roots or r in seen_roots:
                    continue
                seen_roots.add(r)
                k = val[r]
                if k is None:
                    continue
                if k in owned or k in vals_t or k in head_consts or occ[k] & ~mask:
                    return
                owned.add(k)
            labels: dict[int, int] = {}
            pi = tuple(labels.setdefault(find(v), len(labels)) for v in cl.head)
            if out.get(pi, uses + 1) > uses:
                out[pi] = uses

        def join(j, rest, left, uses):
            args = body[j]
            new = [v for v in dict.fromkeys(args) if not fixed[v]]
            for guess in product(dom, repeat=len(new)):
                for v, k in zip(new, guess):
                    val[v], fixed[v] = k, True
                tj = tuple(val[v] for v in args)
                remaining = nb - j - 1
                if remaining == 0:
                    choices = (rest,)
                else:
                    choices = _submasks(rest, remaining)
                for s in choices:
                    for pi, u in sub(tj, s, left).items():
                        mark = len(merges)
                        for p in range(len(args)):
                            for q in range(p):
                                if pi[p] == pi[q]:
                                    merges.append((args[p], args[q]))
                        if remaining == 0:
                            finish(uses + u)
                        else:
                            join(j + 1, rest & ~s, left - u, uses + u)
                        del merges[mark:]
                for v in new:
                    val[v], fixed[v] = None, False

        join(0, mask, b - 1, 1)

    # --- derivability ----------------------------------------------------

    def derive(self, c: Metarule, depth: int) -> DerivationTrace | None:
        """A derivation of c from the theory in at most ``depth`` steps."""
        c = c.canonical()
        if not c.pred_distinct:
            return None
        head, facts, nconst = self._skolemize(c)
        n = len(facts)
        full = (1 << n) - 1
        facts_by_arity: dict[int, list[tuple[int, tuple[int, ...]]]] = {}
        for j, f in enumerate(facts):
            facts_by_arity.setdefault(len(f), []).append((j, f))
        self.nodes = 0
        found: list = []
        leaf_vars: list[int] = []
        expansions: list[tuple[int, _Clause, int]] = []
        counter = [0]

        failed: dict = {}

        def state(goals, head_vars):
            """Memo key for the rest of the search, or None if the state can
            no longer lead to a renaming of c.

            Variables that already belong to the derived clause (head or
            closed leaves) and no longer occur in open goals can never be
            merged again, so two of them on the same constant are fatal.
            """
            droots = {self._find(v) for v in head_vars}
            droots.update(self._find(v) for v in leaf_vars)
            names: dict[int, int] = {}
            enc = []
            for _, args in goals:
                row = []
                for a in args:
                    r = self._find(a)
                    k = names.get(r)
                    if k is None:
                        k = names[r] = len(names)
                    row.append((k, self.const[r], r in droots))
                enc.append(tuple(row))
            claimed = []
            for r in droots:
                if r not in names:
                    claimed.append(self.const[r])
            if len(claimed) != len(set(claimed)):
                return None
            return tuple(enc), frozenset(claimed)

        def search(goals, uses, used, head_vars):
            if not goals:
                if used != full:
                    return False
                roots = {self._find(v) for v in head_vars}
                roots.update(self._find(v) for v in leaf_vars)
                return len(roots) == nconst
            st = state(goals, head_vars)
            if st is None:
                return False
            key = (st, used)
            if failed.get(key, -1) >= uses:
                return False
            if step(goals, uses, used, head_vars):
                return True
            failed[key] = uses
            return False

        def step(goals, uses, used, head_vars):
            self._tick()
            i = self._select(goals)
            gid, args = goals[i]
            rest = goals[:i] + goals[i + 1:]
            nleft = n - bin(used).count("1")
            tried = set()
            for j, f in facts_by_arity.get(len(args), ()):
                if used >> j & 1 or f in tried:
                    continue
                tried.add(f)
                mark = len(self.trail)
                if all(self._bind(a, k) for a, k in zip(args, f)):
                    leaf_vars.extend(args)
                    if search(rest, uses, used | (1 << j), head_vars):
                        return True
                    del leaf_vars[len(leaf_vars) - len(args):]
                self._undo(mark)
            if uses > 0:
                room = nleft - len(goals) + 1
                for cl in self.by_arity.get(len(args), ()):
                    if cl.size > room:
                        break
                    if not cl.active:
                        continue
                    mark = len(self.trail)
                    base = self._expand(args, cl)
                    if base is None:
                        continue
                    ids = range(counter[0], counter[0] + cl.size)
                    counter[0] += cl.size
                    expansions.append((gid, cl, ids.start))
                    new = rest + [(g, tuple(base + x for x in b)) for g, b in zip(ids, cl.body)]
                    if search(new, uses - 1, used, head_vars):
                        return True
                    expansions.pop()
                    counter[0] -= cl.size
                    self._undo(mark)
                    self._free(base)
            return False

        for limit in range(depth + 1):
            self._reset()
            root = self._alloc(len(head))
            if not all(self._bind(root + i, k) for i, k in enumerate(head)):
                return None
            root_args = tuple(root + i for i in range(len(head)))
            for cl in self.by_arity.get(len(head), ()):
                if cl.size > n:
                    break
                if not cl.active:
                    continue
                mark = len(self.trail)
                base = self._expand(root_args, cl)
                if base is None:
                    continue
                counter[0] = cl.size
                goals = [(g, tuple(base + x for x in b)) for g, b in enumerate(cl.body)]
                del leaf_vars[:]
                del expansions[:]
                if search(goals, limit, 0, root_args):
                    return self._trace(cl, expansions)
                self._undo(mark)
                self._free(base)
        return None

    def _trace(self, root: _Clause, expansions) -> DerivationTrace:
        current = root.rule
        ids = list(range(root.size))
        steps = []
        for gid, cl, start in expansions:
            idx = ids.index(gid)
            h, b, order = canonical_form_with_order(current.head, current.body)
            parent = Metarule.from_canonical(h, b)
            steps.append(make_step(parent, order.index(idx), cl.rule))
            head, body = resolve_parts(current, idx, cl.rule)[:2]
            current = Metarule(head, body)
            ids = ids[:idx] + ids[idx + 1:] + list(range(start, start + cl.size))
        return DerivationTrace(root.rule.text, steps)


def split_derivation(c: Metarule, present: Callable[[str], bool],
                     arities: Iterable[int]) -> tuple[str, str] | None:
    """Cheap sufficient test for one-step derivability.

    Cut the body of ``c`` into Y and the rest and join the two parts through
    a new literal L(v): c1 = head :- rest, L(v) and c2 = L(v) :- Y resolve
    to c.  ``v`` must contain every variable Y shares with the other part.
    Returns the canonical texts of c1 and c2 when both are ``present``.
    """
    for t1, lit, ys in _splits(c, arities):
        if present(t1):
            t2 = canonical_text(lit, ys)
            if present(t2):
                return t1, t2
    return None


def split_depth(c: Metarule, known: Mapping[str, int], arities: Iterable[int],
                limit: int) -> int | None:
    """Fewest steps over the splits of ``c`` whose two pieces have known
    derivation lengths: the pieces' derivations joined by one more
    resolution.  None unless some split fits within ``limit``."""
    best = None
    for t1, lit, ys in _splits(c, arities):
        d1 = known.get(t1)
        if d1 is None or d1 + 1 > (limit if best is None else best - 1):
            continue
        d2 = known.get(canonical_text(lit, ys))
        if d2 is None:
            continue
        d = d1 + d2 + 1
        if d <= limit and (best is None or d < best):
            best = d
            if d == 1:
                break
    return best


def _splits(c: Metarule, arities: Iterable[int]):
    c = c.canonical()
    body = c.body
    n = len(body)
    fo = sorted(c.fo_vars())
    fresh = max(fo, default=-1) + 1
    newp = max(c.pred_vars()) + 1
    arities = sorted(set(arities))
    for mask in range(1, 1 << n):
        ys = [b for i, b in enumerate(body) if mask >> i & 1]
        rest = [b for i, b in enumerate(body) if not mask >> i & 1]
        inner = {a for b in ys for a in b.args}
        outer = set(c.head.args)
        for b in rest:
            outer.update(b.args)
        iface = inner & outer
        for a in arities:
            if a < len(iface):
                continue
            for v in _covering(iface, fo, fresh, a):
                lit = Literal(newp, v)
                # the second text is only built when the first is of use
                yield canonical_text(c.head, rest + [lit]), lit, ys


def _submasks(mask: int, keep: int):
    """Nonempty submasks of ``mask`` leaving at least ``keep`` bits."""
    total = bin(mask).count("1")
    s = mask
    while s:
        if total - bin(s).count("1") >= keep:
            yield s
        s = (s - 1) & mask


def _covering(must: set[int], pool: list[int], fresh: int, arity: int):
    """Argument tuples of length ``arity`` containing every variable of
    ``must``; extra positions take any variable of ``pool`` or new ones
    (introduced in order)."""
    seen = set()
    for v in product(pool + list(range(fresh, fresh + arity)), repeat=arity):
        if not must <= set(v):
            continue
        nxt, ok = fresh, True
        for x in v:
            if x >= fresh:
                if x > nxt:
                    ok = False
                    break
                if x == nxt:
                    nxt += 1
        if ok and v not in seen:
            seen.add(v)
            yield v
