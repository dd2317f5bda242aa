"""Witness clauses for the irreducibility results and the hypothesis space
bound."""

from __future__ import annotations

from .clause import Literal, Metarule
from .fragments import ResourceGuardError

MAX_WITNESS_ARITY = 4
MAX_WITNESS_ITER = 10


class _Builder:
    """Allocates variable ids from names so constructions read like the
    clauses they build."""

    def __init__(self):
        self.preds: dict[str, int] = {}
        self.fos: dict[str, int] = {}

    def lit(self, pred: str, *args: str) -> Literal:
        p = self.preds.setdefault(pred, len(self.preds))
        return Literal(p, tuple(self.fos.setdefault(a, len(self.fos)) for a in args))


def _check(value: int, low: int, high: int, what: str) -> None:
    if value < low:
        raise ValueError(f"{what} must be at least {low}")
    if value > high:
        raise ResourceGuardError(f"{what} above the guard of {high}")


def witness_ci() -> Metarule:
    b = _Builder()
    head = b.lit("P", "A", "B")
    body = [b.lit("Q", "A", "C"), b.lit("R", "A", "D"), b.lit("S", "B", "C"),
            b.lit("T", "B", "D"), b.lit("U", "C", "D")]
    return Metarule(head, body).canonical()


def witness_ca(a: int) -> Metarule:
    """The a-by-a grid clause with a*a + a - 1 body literals."""
    _check(a, 2, MAX_WITNESS_ARITY, "a")
    b = _Builder()
    head = b.lit("P", *[f"A{i}" for i in range(1, a + 1)])
    body = []
    for i in range(1, a + 1):
        for j in range(1, a + 1):
            body.append(b.lit(f"Q{i},{j}", f"A{i}", *[f"B{j},{l}" for l in range(1, a)]))
    for l in range(1, a):
        body.append(b.lit(f"R{l}", *[f"B{j},{l}" for j in range(1, a + 1)]))
    return Metarule(head, body).canonical()


def witness_cim(m: int) -> Metarule:
    """C_I with its Q and R literals expanded ``m`` times; body size 3m+5."""
    _check(m, 1, MAX_WITNESS_ITER, "m")
    b = _Builder()
    head = b.lit("P", "A", "B")
    rest = [b.lit("S", "B", "C"), b.lit("T", "B", "D"), b.lit("U", "C", "D")]
    c_prev, d_prev = "C", "D"
    for k in range(1, m + 1):
        ck, dk = f"C{k}", f"D{k}"
        rest += [b.lit(f"V{k}", ck, dk), b.lit(f"Q{k}", ck, c_prev), b.lit(f"R{k}", dk, d_prev)]
        c_prev, d_prev = ck, dk
    body = [b.lit("Q", "A", c_prev), b.lit("R", "A", d_prev)] + rest
    return Metarule(head, body).canonical()


def witness_datalog_s(a: int) -> Metarule:
    """P(X1..Xa) :- Q1(X1),...,Qa(Xa)."""
    _check(a, 1, MAX_WITNESS_ARITY, "a")
    b = _Builder()
    head = b.lit("P", *[f"X{i}" for i in range(1, a + 1)])
    body = [b.lit(f"Q{i}", f"X{i}") for i in range(1, a + 1)]
    return Metarule(head, body).canonical()


def witness_singleton_s(a: int) -> Metarule:
    """Every head variable paired with a private variable in two literals."""
    _check(a, 2, MAX_WITNESS_ARITY, "a")
    b = _Builder()
    head = b.lit("P", *[f"A{i}" for i in range(1, a + 1)])
    body = []
    for i in range(1, a + 1):
        body.append(b.lit(f"P{2 * i - 1}", f"A{i}", f"B{i}"))
        body.append(b.lit(f"P{2 * i}", f"A{i}", f"B{i}"))
    return Metarule(head, body).canonical()


WITNESSES = {
    "ci": (witness_ci, False),
    "ca": (witness_ca, True),
    "cim": (witness_cim, True),
    "datalog-s": (witness_datalog_s, True),
    "singleton-s": (witness_singleton_s, True),
}


def hypothesis_space_size(p: int, k: int, m: int, n: int) -> int:
    """Upper bound (p^(m+1) * k)^n on programs with n clauses built from k
    metarules of body size at most m over p predicate symbols."""
    for name, v in (("p", p), ("k", k), ("m", m), ("n", n)):
        if v < 0:
            raise ValueError(f"{name} must be nonnegative")
    return (p ** (m + 1) * k) ** n
