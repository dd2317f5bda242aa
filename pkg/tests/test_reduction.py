import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metareduce.clause import parse
from metareduce.fragments import FragmentSpec, enumerate_fragment
from metareduce.reduction import (ReductionRelation, ReductionTimeout, check_validity,
                                  is_redundant, mreduce, reduce, reduce_with_report,
                                  unsupported)
from metareduce.resolution import entails_k
from metareduce.subsumption import is_subsumed
from oracles import restarting_scan, brute_reductions, key_of, naive_redundant
from strategies import metarules

M1 = parse("P(A,B) :- Q(B,A).")
M2 = parse("P(A,B) :- Q(A,A),R(B,B).")
M3 = parse("P(A,B) :- Q(A,C),R(B,C).")
M4 = parse("P(A,B) :- Q(B,C),R(A,D),S(A,D),T(B,C).")
WORKED = [M1, M2, M3, M4]

IDENTS = [parse(t) for t in ["P(A,B) :- Q(A,B).", "P(A,B) :- Q(A,B),R(A).",
                             "P(A,B) :- Q(A,B),R(A,B).", "P(A,B) :- Q(A,B),R(A,B),S(A,B)."]]
CHAIN = parse("P(A,B) :- Q(A,C),R(C,B).")
M22 = FragmentSpec(frozenset({2}), 2, "connected")

small = metarules(arities=(1, 2), max_body=2, nvars=3, distinct_preds=True)
theories = st.lists(small, min_size=1, max_size=6)


def texts(ms):
    return {m.text for m in ms}


def test_worked_example_in_given_order():
    assert texts(reduce(WORKED, ReductionRelation("E", 7), order="given")) == texts([M1, M4])


def test_worked_example_restricted_to_small_clauses():
    got = mreduce(WORKED, ReductionRelation("E", 7), M22)
    assert texts(got) == texts([M1, M2, M3])


def test_largest_first_keeps_the_small_clauses():
    assert texts(reduce(WORKED, ReductionRelation("E", 7))) == texts([M1, M2, M3])


@pytest.mark.parametrize("kind,expected", [
    ("S", [0]), ("E", [0]), ("D", [0, 1, 2]),
])
def test_introduction_theory(kind, expected):
    got = reduce(IDENTS, ReductionRelation(kind, 7))
    assert texts(got) == texts(IDENTS[i] for i in expected)


def test_entailment_removes_the_specialisation():
    got = reduce(IDENTS[:2], ReductionRelation("E", 7))
    assert texts(got) == {IDENTS[0].text}


def test_mreduce_fails_without_support():
    assert mreduce([CHAIN], ReductionRelation("D", 7), FragmentSpec(frozenset({1}), 2, "connected")) is None


def test_mreduce_with_covering_target_is_reduce():
    rel = ReductionRelation("D", 7)
    target = FragmentSpec(frozenset({2}), 4, "connected")
    assert mreduce(WORKED, rel, target) == reduce(WORKED, rel)


def test_report_fields():
    theory = enumerate_fragment(FragmentSpec(frozenset({1, 2}), 2, "connected"))
    r = reduce_with_report(theory, ReductionRelation("D", 5), description="C{1,2}2")
    assert r.input_count == len(theory) == len(r.kept) + r.removed_count
    assert len(set(r.removal_order)) == r.removed_count
    assert not set(r.removal_order) & set(r.kept)
    assert set(r.restored) <= set(r.kept)
    assert r.relation == "D" and r.depth == 5 and r.order == "size-desc" and r.repaired
    data = json.loads(r.to_json())
    assert data["kept"] == r.kept and data["input"] == "C{1,2}2"
    assert r.kept_text().splitlines() == r.kept
    assert r.kept == [m.text for m in sorted((parse(t) for t in r.kept),
                                             key=lambda m: (len(m.body), m.text))]


def test_bad_arguments():
    with pytest.raises(ValueError):
        ReductionRelation("X")
    with pytest.raises(ValueError):
        ReductionRelation("D", -1)
    with pytest.raises(ValueError):
        reduce(WORKED, ReductionRelation("S"), order="random")


def test_timeout():
    theory = enumerate_fragment(FragmentSpec(frozenset({2}), 4, "connected"))
    with pytest.raises(ReductionTimeout):
        reduce(theory, ReductionRelation("D", 7), timeout=0.05)


def test_plain_pass_can_lose_support_at_a_depth_bound():
    # removed through a clause that is itself removed later, the longest
    # clause then needs more steps than the bound allows
    theory = enumerate_fragment(FragmentSpec(frozenset({2}), 2, "connected"))
    rel = ReductionRelation("D", 2)
    plain = reduce(theory, rel, repair=False)
    assert not check_validity(theory, plain, rel).ok
    fixed = reduce_with_report(theory, rel)
    assert check_validity(theory, [parse(t) for t in fixed.kept], rel).ok
    assert len(fixed.kept) > len(plain)


def test_entailment_support_needs_a_longer_subsumer():
    # the clause is only entailed through a derived clause one literal
    # longer than itself, which slack 0 does not look at
    theory = enumerate_fragment(FragmentSpec(frozenset({2}), 2, "datalog"))
    rel = ReductionRelation("E", 3)
    plain = reduce(theory, rel, repair=False)
    assert check_validity(theory, plain, rel).unsupported == ["P(A,A) :- Q(A,B)."]
    assert check_validity(theory, plain, ReductionRelation("E", 3, slack=1)).ok
    assert "P(A,A) :- Q(A,B)." in texts(reduce(theory, rel))


@pytest.mark.parametrize("arities", [(1,), (2,), (1, 2), (0, 1, 2)])
@pytest.mark.parametrize("kind", ["S", "E", "D"])
def test_small_fragments_are_valid_and_idempotent(arities, kind):
    theory = enumerate_fragment(FragmentSpec(frozenset(arities), 3 if arities != (0, 1, 2) else 2,
                                             "connected"))
    rel = ReductionRelation(kind, 7)
    kept = reduce(theory, rel)
    assert check_validity(theory, kept, rel).ok
    assert reduce(kept, rel) == kept


def test_relation_ordering_on_a_small_fragment():
    theory = enumerate_fragment(FragmentSpec(frozenset({1, 2}), 3, "connected"))
    s, e, d = (reduce(theory, ReductionRelation(k, 7)) for k in "SED")
    assert all(entails_k(e, c, 7) for c in s)
    assert all(entails_k(e, c, 7) for c in d)


def test_connected_clauses_subsumed_by_one_literal_clause():
    theory = enumerate_fragment(FragmentSpec(frozenset({1, 2}), 3, "connected"))
    s = reduce(theory, ReductionRelation("S"))
    assert all(len(m.body) == 1 for m in s)
    assert all(any(is_subsumed(t, c) for t in s) for c in theory)


@given(theories, st.sampled_from("SED"))
def test_plain_pass_matches_restarting_scan(theory, kind):
    ordered = sorted({m.canonical() for m in theory}, key=lambda m: (-len(m.body), m.text))
    got = reduce(ordered, ReductionRelation(kind, 2), repair=False)
    want = restarting_scan(ordered, kind, 2)
    assert {key_of(m) for m in got} == {key_of(m) for m in want}


@given(theories, st.sampled_from("SED"))
def test_given_order_matches_restarting_scan(theory, kind):
    ordered = list({m.canonical(): None for m in theory})
    got = reduce(ordered, ReductionRelation(kind, 2), order="given", repair=False)
    want = restarting_scan(ordered, kind, 2)
    assert {key_of(m) for m in got} == {key_of(m) for m in want}


@settings(max_examples=30)
@given(theories, st.sampled_from("SED"))
def test_output_is_a_brute_force_reduction(theory, kind):
    kept = reduce(theory, ReductionRelation(kind, 2))
    _, is_valid = brute_reductions(theory, kind, 2)
    assert is_valid(kept)


@given(theories, small, st.sampled_from("SED"))
def test_is_redundant_matches_oracle(theory, c, kind):
    rest = [m for m in theory if m.canonical() != c.canonical()]
    assert is_redundant(theory, c, ReductionRelation(kind, 2)) == naive_redundant(rest, c, kind, 2)


@given(theories, st.lists(small, max_size=6), st.sampled_from("SED"))
def test_unsupported_matches_oracle(kept, cands, kind):
    keys = {key_of(m) for m in kept}
    got = {key_of(m) for m in unsupported(kept, cands, ReductionRelation(kind, 3))}
    want = {key_of(c) for c in cands
            if key_of(c) not in keys and not naive_redundant(kept, c, kind, 3)}
    assert got == want


@given(theories, st.sampled_from("ED"))
def test_repair_keeps_plain_result_when_valid(theory, kind):
    rel = ReductionRelation(kind, 2)
    plain = reduce(theory, rel, repair=False)
    if check_validity(theory, plain, rel).ok:
        assert reduce(theory, rel) == plain
