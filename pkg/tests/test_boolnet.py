"""Boolean networks: parsing, synchronous update, exhaustive attractor
enumeration against a trajectory-iteration oracle, and signed loops."""

import itertools

import pytest

from immunet.boolnet import (
    NetworkError,
    RefuseExhaustive,
    attractors,
    cytokine_network,
    feedback_loops,
    parse_network,
    state_of,
    update_sync,
)

from oracles import trajectory_attractors

NEGATION_RING = """\
var X = !Y;
var Y = !X;
"""


# parsing ---------------------------------------------------------------------


def test_parse_expression_shapes():
    net = parse_network("var A = (B & !C) | A;\nvar B = A;\nvar C = B;\n")
    assert net.variables == ("A", "B", "C")
    assert update_sync(net, (0, 1, 0)) == (1, 0, 1)


def test_parse_rejects_undeclared_reference():
    with pytest.raises(NetworkError):
        parse_network("var A = B;\n")


def test_parse_rejects_mixed_polarity():
    with pytest.raises(NetworkError):
        parse_network("var A = A;\nvar B = A & !A;\n")


def test_parse_rejects_garbage():
    with pytest.raises(NetworkError) as err:
        parse_network("var A = A;\nvar B = A +;\n")
    assert err.value.line == 2


# update ----------------------------------------------------------------------


def test_quiescence_fixed_point():
    net = cytokine_network()
    zero = tuple([0] * len(net.variables))
    assert update_sync(net, zero) == zero


def test_tnfa_fires_from_mph_lps_ifng():
    net = cytokine_network()
    s = state_of(net, {"Mph": 1, "Lps": 1, "Ifng": 1})
    nxt = update_sync(net, s)
    assert nxt[net.index("Tnfa")] == 1


def test_fixed_points_are_update_idempotent():
    net = cytokine_network()
    for a in attractors(net, fixed={"Lps": 1, "Mph": 1, "NK": 1}):
        if a.kind == "fixed-point":
            assert update_sync(net, a.states[0]) == a.states[0]


# attractors ------------------------------------------------------------------


def test_constant_network_every_state_fixed():
    net = parse_network("var A = A;\nvar B = B;\n")
    found = attractors(net)
    assert len(found) == 4
    assert all(a.kind == "fixed-point" and a.basin == 1 for a in found)


def test_negation_ring_textbook_attractors():
    net = parse_network(NEGATION_RING)
    found = attractors(net)
    fixed = [a for a in found if a.kind == "fixed-point"]
    cycles = [a for a in found if a.kind == "cycle"]
    assert sorted(a.states[0] for a in fixed) == [(0, 1), (1, 0)]
    assert len(cycles) == 1 and cycles[0].length == 2
    assert set(cycles[0].states) == {(0, 0), (1, 1)}
    assert sum(a.basin for a in found) == 4


def test_attractors_replay_and_basins_against_oracle():
    net = cytokine_network()
    fixed = {"Lps": 1, "Mph": 1, "NK": 1}
    found = attractors(net, fixed=fixed)
    # every attractor closes under the update
    for a in found:
        for i, s in enumerate(a.states):
            assert update_sync(net, s) == a.states[(i + 1) % len(a.states)]
    assert sum(a.basin for a in found) == 2 ** (len(net.variables) - 3)
    # independent enumerator agrees on cycles and basin sizes
    free = [v for v in net.variables if v not in fixed]
    states = []
    for bits in itertools.product((0, 1), repeat=len(free)):
        assignment = dict(fixed)
        assignment.update(zip(free, bits))
        states.append(state_of(net, assignment))
    cycles, basins = trajectory_attractors(lambda s: update_sync(net, s), states)
    assert {frozenset(a.states) for a in found} == set(cycles)
    for a in found:
        assert basins[frozenset(a.states)] == a.basin


def test_th1_dominant_fixed_point_present():
    net = cytokine_network()
    target = state_of(
        net,
        {"Lps": 1, "Mph": 1, "NK": 1, "Ifng": 1, "Tnfa": 1, "IL12": 1, "IL2": 1, "Th1": 1},
    )
    found = attractors(net, fixed={"Lps": 1, "Mph": 1, "NK": 1})
    assert any(a.states == (target,) for a in found)


def test_attractors_refuses_oversized_networks():
    lines = ["var V%d = V%d;" % (i, i) for i in range(30)]
    net = parse_network("\n".join(lines) + "\n")
    with pytest.raises(RefuseExhaustive):
        attractors(net)


def test_fixing_requires_identity_update():
    net = cytokine_network()
    with pytest.raises(NetworkError):
        attractors(net, fixed={"Tnfa": 1})


# influences and loops ----------------------------------------------------------


def test_published_influences_present():
    net = cytokine_network()
    edges = set(net.influences())
    assert ("Ifng", "Tnfa", 1) in edges
    assert ("Tnfa", "IL12", 1) in edges
    assert ("IL12", "Ifng", 1) in edges
    assert ("IL10", "Ifng", -1) in edges
    assert ("IL4", "IL12", -1) in edges
    assert ("IL2", "IL2", 1) in edges
    # suppression of Th2's products runs through Th2 itself
    assert ("Ifng", "Th2", -1) in edges
    assert ("Th2", "IL4", 1) in edges
    assert ("Th2", "IL10", 1) in edges


def test_feedback_loops_contain_published_trio():
    loops = dict(feedback_loops(cytokine_network()))
    assert loops[("IL2",)] == 1
    assert loops[("IL12", "Ifng", "Tnfa")] == 1
    assert loops[("IL10", "Th1", "Ifng", "Th2")] == 1


def test_loops_respect_length_bound():
    loops = feedback_loops(cytokine_network(), max_len=2)
    assert all(len(nodes) <= 2 for nodes, _ in loops)


def test_double_negative_loop_gives_multistability():
    found = attractors(cytokine_network(), fixed={"Lps": 1, "Mph": 1, "NK": 1})
    fixed_points = [a for a in found if a.kind == "fixed-point"]
    assert len(fixed_points) >= 2
