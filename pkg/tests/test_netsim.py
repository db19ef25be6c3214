"""World mechanics: contacts, exchanges, stepping, trace determinism,
consistency, the delta policy, and mid-run membership changes."""

import random

import pytest

from immunet.knowledge import Kind, KnowledgeItem, ReplacementOrder, kb_insert
from immunet.netsim import (
    ExchangePolicy,
    Node,
    ScheduleEvent,
    Topology,
    TopologyError,
    Trace,
    Variant,
    World,
    consistency_check,
    contacts_at,
    exchange,
    run,
    step,
)
from immunet.scenarios import robot_order
from immunet.terms import parse_term

EMPTY = ReplacementOrder.empty()


def fact(text, created=0, ttl=None, origin="n0"):
    return KnowledgeItem(Kind.FACT, parse_term(text), created, ttl, origin)


def line_topology(n):
    rooms = ["room%d" % i for i in range(n)]
    return Topology.build(rooms, [(rooms[i], rooms[i + 1]) for i in range(n - 1)])


def world_with(n_nodes, topology=None, order=EMPTY, policy=None):
    w = World(topology or line_topology(n_nodes), order, policy or ExchangePolicy())
    for i in range(n_nodes):
        w.add_node(Node("n%d" % i, "room%d" % i))
    return w


def seed_fact(world, node_id, item):
    node = world.nodes[node_id]
    node.kb = kb_insert(node.kb, item, world.order, 0).kb


# topology / contacts ---------------------------------------------------------


def test_topology_rejects_self_adjacency_and_unknown_rooms():
    with pytest.raises(TopologyError):
        Topology.build(["a"], [("a", "a")])
    with pytest.raises(TopologyError):
        Topology.build(["a"], [("a", "b")])


def test_contacts_same_room():
    topo = line_topology(2)
    assert contacts_at(topo, {"a": "room0", "b": "room0"}, 0) == [("a", "b")]


def test_contacts_non_adjacent_rooms_empty():
    topo = line_topology(3)
    assert contacts_at(topo, {"a": "room0", "b": "room2"}, 0) == []


def test_contacts_clique_in_one_room():
    topo = line_topology(1)
    pairs = contacts_at(topo, {"a": "room0", "b": "room0", "c": "room0"}, 0)
    assert pairs == [("a", "b"), ("a", "c"), ("b", "c")]


def test_contacts_rejects_unknown_room():
    with pytest.raises(TopologyError):
        contacts_at(line_topology(1), {"a": "nowhere"}, 0)


# exchange --------------------------------------------------------------------


def test_exchange_push_all_unions_bases():
    w = world_with(2, topology=Topology.build(["room0", "room1"], [("room0", "room1")]))
    seed_fact(w, "n0", fact("F1(a)", origin="n0"))
    seed_fact(w, "n1", fact("F2(b)", origin="n1"))
    exchange(w, Trace(), w.nodes["n0"], w.nodes["n1"], now=1)
    assert w.nodes["n0"].kb.fact_terms() == w.nodes["n1"].kb.fact_terms() == {
        parse_term("F1(a)"),
        parse_term("F2(b)"),
    }


def test_exchange_resolves_by_order():
    w = world_with(2, topology=Topology.build(["room0", "room1"], [("room0", "room1")]), order=robot_order())
    seed_fact(w, "n0", fact("Position(3, r1, p)", origin="n0"))
    seed_fact(w, "n1", fact("Position(5, r1, q)", origin="n1"))
    exchange(w, Trace(), w.nodes["n0"], w.nodes["n1"], now=1)
    want = {parse_term("Position(5, r1, q)")}
    assert w.nodes["n0"].kb.fact_terms() == want
    assert w.nodes["n1"].kb.fact_terms() == want


def test_expired_items_never_cross():
    w = world_with(2, topology=Topology.build(["room0", "room1"], [("room0", "room1")]))
    seed_fact(w, "n0", fact("F1(a)", created=0, ttl=2, origin="n0"))
    w.clock = 4
    trace = run(w, 1)
    assert not trace.final.nodes["n1"].kb.fact_terms()
    assert any(r.kind == "purge" for r in trace.records)


# stepping --------------------------------------------------------------------


def test_step_with_no_contacts_only_advances_clock():
    w = world_with(3)
    w.nodes["n0"].room = "room0"
    w.nodes["n1"].room = "room2"
    del w.nodes["n2"]
    seed_fact(w, "n0", fact("F1(a)"))
    before = {nid: n.kb for nid, n in w.nodes.items()}
    step(w, Trace())
    assert w.clock == 1
    assert all(w.nodes[nid].kb == kb for nid, kb in before.items())


def test_two_colocated_nodes_equal_after_one_step():
    topo = Topology.build(["room0"], [])
    w = World(topo, EMPTY, ExchangePolicy())
    w.add_node(Node("a", "room0"))
    w.add_node(Node("b", "room0"))
    seed_fact(w, "a", fact("F1(a)", origin="a"))
    step(w, Trace())
    assert w.nodes["a"].kb.keys() == w.nodes["b"].kb.keys()


def test_line_fact_travels_one_hop_per_tick():
    # snapshot semantics: r0's fact needs exactly 2 ticks to reach n2
    w = world_with(3)
    seed_fact(w, "n0", fact("F1(a)"))
    step(w, Trace())
    assert parse_term("F1(a)") in w.nodes["n1"].kb.fact_terms()
    assert parse_term("F1(a)") not in w.nodes["n2"].kb.fact_terms()
    step(w, Trace())
    assert parse_term("F1(a)") in w.nodes["n2"].kb.fact_terms()


def test_period_gates_exchanges():
    w = world_with(2, policy=ExchangePolicy(Variant.PUSH_ALL, period=3))
    seed_fact(w, "n0", fact("F1(a)"))
    step(w, Trace())
    step(w, Trace())
    assert not w.nodes["n1"].kb.fact_terms()
    step(w, Trace())  # tick 3 is due
    assert w.nodes["n1"].kb.fact_terms()


# run / trace -----------------------------------------------------------------


def test_run_zero_horizon_empty_trace():
    w = world_with(2)
    trace = run(w, 0)
    assert trace.serialize() == ""


def test_run_does_not_mutate_input_world():
    w = world_with(2)
    seed_fact(w, "n0", fact("F1(a)"))
    run(w, 5)
    assert w.clock == 0
    assert not w.nodes["n1"].kb.fact_terms()


def test_trace_determinism():
    w, _ = _random_world(seed=23)
    a = run(w, 12).serialize()
    b = run(w, 12).serialize()
    assert a == b


def test_quiescent_convergence_by_diameter():
    # static line of 5, one fact at the end, no input after tick 0:
    # consistent at every tick >= diameter (4)
    w = world_with(5)
    seed_fact(w, "n0", fact("F1(a)"))
    for tick in range(1, 9):
        step(w, Trace())
        if tick >= 4:
            assert consistency_check(w).consistent, "tick %d" % tick


def test_quiescent_convergence_scales_with_period():
    # line of 4 (diameter 3), period 2: consistent for all ticks >= 2 * 3
    w = world_with(4, policy=ExchangePolicy(Variant.PUSH_ALL, period=2))
    seed_fact(w, "n0", fact("F1(a)"))
    for tick in range(1, 10):
        step(w, Trace())
        if tick >= 6:
            assert consistency_check(w).consistent, "tick %d" % tick


def test_exchange_never_resurrects_dominated_items():
    w = world_with(2, topology=Topology.build(["room0", "room1"], [("room0", "room1")]), order=robot_order())
    seed_fact(w, "n0", fact("Position(3, r1, p)", origin="n0"))
    seed_fact(w, "n1", fact("Position(5, r1, q)", origin="n1"))
    for _ in range(4):
        step(w, Trace())
    for node in w.nodes.values():
        assert parse_term("Position(3, r1, p)") not in node.kb.fact_terms()


# consistency -----------------------------------------------------------------


def test_single_node_consistent():
    w = world_with(1)
    assert consistency_check(w).consistent


def test_divergent_report_lists_missing():
    w = world_with(3)
    w.nodes["n0"].room = "room0"
    w.nodes["n1"].room = "room2"
    del w.nodes["n2"]
    seed_fact(w, "n0", fact("F1(a)"))
    seed_fact(w, "n1", fact("F2(b)"))
    verdict = consistency_check(w)
    assert not verdict.consistent
    assert "fact F2(b)" in verdict.missing["n0"][0]
    assert "fact F1(a)" in verdict.missing["n1"][0]


# push-delta ------------------------------------------------------------------


def test_push_delta_converges_like_push_all():
    for seed in range(8):
        wa, items = _random_world(seed, policy=ExchangePolicy(Variant.PUSH_ALL, 1))
        wd, _ = _random_world(seed, policy=ExchangePolicy(Variant.PUSH_DELTA, 1))
        ta = run(wa, 14).final
        td = run(wd, 14).final
        for nid in ta.nodes:
            assert ta.nodes[nid].kb.keys() == td.nodes[nid].kb.keys(), "seed %d" % seed


def test_push_delta_offers_shrink_after_contact():
    w = world_with(2, topology=Topology.build(["room0", "room1"], [("room0", "room1")]),
                   policy=ExchangePolicy(Variant.PUSH_DELTA, 1))
    seed_fact(w, "n0", fact("F1(a)"))
    t1 = Trace()
    step(w, t1)
    first = [dict(r.fields) for r in t1.records if r.kind == "exchange"]
    assert first and first[0]["offered_a"] == "1"
    t2 = Trace()
    step(w, t2)  # nothing new anywhere: no offers worth logging
    assert not [r for r in t2.records if r.kind == "exchange"]


# membership ------------------------------------------------------------------


def test_join_and_leave_mid_run():
    w = world_with(2)
    seed_fact(w, "n0", fact("F1(a)"))
    w.add_event(ScheduleEvent(2, "join", "n9", room="room1"))
    w.add_event(ScheduleEvent(5, "leave", "n0"))
    trace = run(w, 8)
    final = trace.final
    assert "n0" not in final.nodes and "n9" in final.nodes
    assert parse_term("F1(a)") in final.nodes["n9"].kb.fact_terms()
    assert consistency_check(final).consistent
    kinds = [r.kind for r in trace.records]
    assert "join" in kinds and "leave" in kinds


# helpers ---------------------------------------------------------------------


def _random_world(seed, policy=None):
    rng = random.Random(seed)
    n = rng.randint(2, 5)
    shape_rooms = ["room%d" % i for i in range(n)]
    edges = [(shape_rooms[i], shape_rooms[i + 1]) for i in range(n - 1)]
    for _ in range(rng.randrange(3)):
        a, b = rng.sample(range(n), 2)
        if a != b:
            edges.append((shape_rooms[min(a, b)], shape_rooms[max(a, b)]))
    topo = Topology.build(shape_rooms, edges)
    w = World(topo, EMPTY, policy or ExchangePolicy())
    items = []
    for i in range(n):
        w.add_node(Node("n%d" % i, "room%d" % i))
    for k in range(rng.randint(1, 6)):
        nid = "n%d" % rng.randrange(n)
        item = fact("F%d(c%d)" % (rng.randrange(4), rng.randrange(5)), origin=nid)
        seed_fact(w, nid, item)
        items.append(item)
    for k in range(rng.randrange(4)):
        tick = rng.randint(1, 6)
        nid = "n%d" % rng.randrange(n)
        w.add_event(
            ScheduleEvent(tick, "inject", nid,
                          item=fact("G%d(c%d)" % (rng.randrange(3), rng.randrange(5)), created=tick, origin=nid))
        )
    return w, items


def test_app_failure_is_recorded_and_skipped(monkeypatch):
    from immunet import netsim
    from immunet.scenarios import robot_scenario

    world, _ = robot_scenario()
    real = netsim.infer_step

    def flaky(kb, state, theory, now, node_id, caps=frozenset()):
        if node_id == "r1":
            raise RuntimeError("sensor driver crash")
        return real(kb, state, theory, now, node_id, caps)

    monkeypatch.setattr(netsim, "infer_step", flaky)
    trace = netsim.run(world, 6)
    errors = [r for r in trace.records if r.kind == "app_error"]
    assert errors and dict(errors[0].fields)["node"] == "r1"
    # the rest of the world keeps moving: the camera still executes
    assert any(r.kind == "execute" for r in trace.records)


def test_push_delta_respects_replacement_order():
    # a third party refreshes the stale reading at one node; re-offering it
    # must not resurrect the dominated item at the node holding the newer one
    topo = Topology.build(["room0", "room1"], [("room0", "room1")])
    w = World(topo, robot_order(), ExchangePolicy(Variant.PUSH_DELTA, 1))
    w.add_node(Node("a", "room0"))
    w.add_node(Node("b", "room1"))
    seed_fact(w, "b", fact("Position(3, r1, p)", origin="b"))
    w.add_event(ScheduleEvent(2, "inject", "a",
                              item=fact("Position(5, r1, q)", created=2, origin="a")))
    w.add_event(ScheduleEvent(3, "inject", "b",
                              item=fact("Position(3, r1, p)", created=3, origin="b")))
    trace = Trace()
    for _ in range(5):
        step(w, trace)
    newest = parse_term("Position(5, r1, q)")
    for node in w.nodes.values():
        assert node.kb.fact_terms() == {newest}, node.id
