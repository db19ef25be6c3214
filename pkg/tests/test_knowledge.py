"""Knowledge-base semantics: the spec examples for ordering, insertion,
purging, and merging, plus seeded-random law sweeps."""

import random

import pytest

from immunet.knowledge import (
    Kind,
    KnowledgeBase,
    KnowledgeItem,
    Ordering,
    kb_insert,
    kb_merge,
    kb_purge,
    order_compare,
    parse_replacement_rule,
)
from immunet.scenarios import robot_order
from immunet.terms import parse_term


def fact(text, created=0, ttl=None, origin="n0"):
    return KnowledgeItem(Kind.FACT, parse_term(text), created, ttl, origin)


def goal(text, created=0, ttl=None, origin="n0"):
    return KnowledgeItem(Kind.GOAL, parse_term(text), created, ttl, origin)


ORDER = robot_order()


# ordering ------------------------------------------------------------------


def test_o1_stale_position_below_newer():
    a = fact("Position(3, r1, p)")
    b = fact("Position(5, r1, q)")
    assert order_compare(ORDER, a, b) is Ordering.LESS
    assert order_compare(ORDER, b, a) is Ordering.GREATER


def test_o1_equal_timestamps_incomparable():
    a = fact("Position(5, r1, p)")
    assert order_compare(ORDER, a, a) is Ordering.INCOMPARABLE


def test_o1_requires_same_robot():
    a = fact("Position(3, r1, p)")
    b = fact("Position(5, r2, q)")
    assert order_compare(ORDER, a, b) is Ordering.INCOMPARABLE


def test_o2_subgoal_below_newer_interest():
    a = goal("TakeSnapshot(7, area_a, X)")
    b = goal("Interest(9, area_b)")
    assert order_compare(ORDER, a, b) is Ordering.LESS


def test_o2_does_not_cross_kinds():
    a = fact("Position(7, r1, p)")
    b = goal("Interest(9, area_b)")
    assert order_compare(ORDER, a, b) is Ordering.INCOMPARABLE


def test_rules_require_strict_distinct_guard():
    with pytest.raises(Exception):
        parse_replacement_rule("Ox: fact P(T) < fact P(T) if T < T")
    with pytest.raises(Exception):
        parse_replacement_rule("Ox: fact P(T) < fact P(T2) if T2 < T")  # guard vars swapped across sides


# insertion -----------------------------------------------------------------


def test_insert_replaces_stale_position():
    kb = kb_insert(KnowledgeBase.empty(), fact("Position(3, r1, p)"), ORDER, 0).kb
    out = kb_insert(kb, fact("Position(5, r1, q)"), ORDER, 0)
    assert [it.term for it in out.kb] == [parse_term("Position(5, r1, q)")]
    assert [it.term for it in out.removed] == [parse_term("Position(3, r1, p)")]


def test_insert_into_empty_is_identity():
    item = fact("Detect(2, area_a)")
    out = kb_insert(KnowledgeBase.empty(), item, ORDER, 0)
    assert list(out.kb) == [item]


def test_insert_stale_subgoal_is_dropped():
    kb = kb_insert(KnowledgeBase.empty(), goal("Interest(9, area_b)"), ORDER, 0).kb
    out = kb_insert(kb, goal("TakeSnapshot(7, area_a, X)"), ORDER, 0)
    assert out.kb is kb
    assert out.dropped == "stale"


def test_insert_drops_expired_on_arrival():
    out = kb_insert(KnowledgeBase.empty(), fact("Detect(2, area_a)", created=2, ttl=8), ORDER, 10)
    assert len(out.kb) == 0 and out.dropped == "expired"


def test_insert_never_keeps_two_comparable_items():
    rng = random.Random(7)
    kb = KnowledgeBase.empty()
    for _ in range(200):
        kb = kb_insert(kb, _random_item(rng), ORDER, 0).kb
    items = list(kb)
    for i, a in enumerate(items):
        for b in items[i + 1:]:
            assert order_compare(ORDER, a, b) is Ordering.INCOMPARABLE


# purging -------------------------------------------------------------------


def test_purge_boundary():
    item = fact("Detect(2, area_a)", created=2, ttl=8)
    kb = KnowledgeBase._make([item])
    assert len(kb_purge(kb, 10).kb) == 0  # 2 + 8 <= 10
    assert len(kb_purge(kb, 9).kb) == 1


def test_no_ttl_never_expires():
    kb = KnowledgeBase._make([fact("Detect(2, area_a)")])
    assert len(kb_purge(kb, 10**9).kb) == 1


def test_purge_idempotent():
    rng = random.Random(3)
    kb = _random_kb(rng)
    once = kb_purge(kb, 5).kb
    assert kb_purge(once, 5).kb == once


def test_purge_then_insert_equals_insert_then_purge():
    rng = random.Random(11)
    for _ in range(100):
        kb = _random_kb(rng)
        item = _random_item(rng)
        now = rng.randrange(12)
        a = kb_insert(kb_purge(kb, now).kb, item, ORDER, now).kb
        b = kb_purge(kb_insert(kb, item, ORDER, now).kb, now).kb
        assert a == b


# merging -------------------------------------------------------------------


def test_merge_idempotent():
    rng = random.Random(5)
    for _ in range(50):
        kb = _random_kb(rng)
        assert kb_merge(kb, kb, ORDER, 0) == kb_purge(kb, 0).kb


def test_merge_forced_by_o1():
    a = KnowledgeBase._make([fact("Position(3, r1, p)")])
    b = KnowledgeBase._make([fact("Position(5, r1, q)")])
    merged = kb_merge(a, b, ORDER, 0)
    assert [it.term for it in merged] == [parse_term("Position(5, r1, q)")]


def test_merge_commutative_on_random_bases():
    rng = random.Random(13)
    for _ in range(100):
        a, b = _random_kb(rng), _random_kb(rng)
        now = rng.randrange(8)
        assert kb_merge(a, b, ORDER, now) == kb_merge(b, a, ORDER, now)


def test_merge_associative_on_random_bases():
    rng = random.Random(17)
    for _ in range(60):
        a, b, c = _random_kb(rng), _random_kb(rng), _random_kb(rng)
        left = kb_merge(kb_merge(a, b, ORDER, 0), c, ORDER, 0)
        right = kb_merge(a, kb_merge(b, c, ORDER, 0), ORDER, 0)
        assert left == right


def test_duplicate_key_keeps_later_expiry():
    early = fact("Detect(2, area_a)", created=2, ttl=3, origin="a")
    late = fact("Detect(2, area_a)", created=2, ttl=9, origin="b")
    kb = kb_insert(KnowledgeBase.empty(), early, ORDER, 2).kb
    kb = kb_insert(kb, late, ORDER, 2).kb
    assert list(kb)[0].ttl == 9
    # and the resolution is symmetric
    kb2 = kb_insert(kb_insert(KnowledgeBase.empty(), late, ORDER, 2).kb, early, ORDER, 2).kb
    assert kb == kb2


# strict partial order laws --------------------------------------------------


def test_order_laws_on_sampled_items():
    rng = random.Random(42)
    items = [_random_item(rng) for _ in range(50)]
    n = len(items)
    less = [[order_compare(ORDER, a, b) is Ordering.LESS for b in items] for a in items]
    for i in range(n):
        assert not less[i][i], "irreflexive"
    for i in range(n):
        for j in range(n):
            assert not (less[i][j] and less[j][i]), "antisymmetric"
    for i in range(n):
        for j in range(n):
            if not less[i][j]:
                continue
            for k in range(n):
                if less[j][k]:
                    assert less[i][k], "transitive"


# random data ----------------------------------------------------------------


def _random_item(rng: random.Random) -> KnowledgeItem:
    choice = rng.randrange(4)
    t = rng.randrange(10)
    if choice == 0:
        term = "Position(%d, r%d, p%d)" % (t, rng.randrange(3), rng.randrange(3))
        return fact(term, created=rng.randrange(6), ttl=rng.choice([None, None, 4, 8]), origin="n%d" % rng.randrange(3))
    if choice == 1:
        return fact("Detect(%d, area_%s)" % (t, rng.choice("ab")), created=rng.randrange(6))
    if choice == 2:
        return goal("Interest(%d, area_%s)" % (t, rng.choice("ab")), created=rng.randrange(6))
    return goal("TakeSnapshot(%d, area_%s, _)" % (t, rng.choice("ab")), created=rng.randrange(6))


def _random_kb(rng: random.Random) -> KnowledgeBase:
    kb = KnowledgeBase.empty()
    for _ in range(rng.randrange(8)):
        kb = kb_insert(kb, _random_item(rng), ORDER, 0).kb
    return kb
