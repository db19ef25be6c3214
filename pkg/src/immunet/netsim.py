"""Discrete-tick world of nodes exchanging knowledge opportunistically.

Nodes meet when they occupy the same or adjacent rooms.  Every exchange
tick each contacting pair merges knowledge drawn from the tick-start
snapshots (so one tick moves information exactly one hop and pair order
is immaterial), then every node runs one application step: scripted
injections and, when a theory is loaded, a local inference round.
Everything is deterministic; re-running a world yields a byte-identical
trace.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

from .knowledge import (
    Kind,
    KnowledgeBase,
    KnowledgeItem,
    ReplacementOrder,
    kb_insert,
    kb_purge,
)
from .logic import InferenceState, Theory, execute_primitive, infer_step
from .terms import covers


class Variant(enum.Enum):
    PUSH_ALL = "push_all"
    PUSH_DELTA = "push_delta"


@dataclass(frozen=True)
class ExchangePolicy:
    variant: Variant = Variant.PUSH_ALL
    period: int = 1

    def __post_init__(self):
        if self.period < 1:
            raise ValueError("exchange period must be >= 1")


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    rooms: frozenset[str]
    adjacency: frozenset[tuple[str, str]]  # stored with both orientations

    @classmethod
    def build(cls, rooms: Iterable[str], edges: Iterable[tuple[str, str]]) -> "Topology":
        room_set = frozenset(rooms)
        adj = set()
        for a, b in edges:
            if a == b:
                raise TopologyError("adjacency must be irreflexive: %s" % a)
            if a not in room_set or b not in room_set:
                raise TopologyError("adjacency references unknown room: %s-%s" % (a, b))
            adj.add((a, b))
            adj.add((b, a))
        return cls(room_set, frozenset(adj))

    def adjacent(self, a: str, b: str) -> bool:
        return (a, b) in self.adjacency

    def in_contact(self, a: str, b: str) -> bool:
        return a == b or self.adjacent(a, b)


@dataclass
class Node:
    id: str
    room: str
    caps: frozenset[str] = frozenset()
    kb: KnowledgeBase = field(default_factory=KnowledgeBase.empty)
    app: InferenceState | None = None
    arrivals: dict = field(default_factory=dict)  # (kind, term) -> arrival tick
    hwm: dict = field(default_factory=dict)       # neighbor id -> last contact tick

    def copy(self) -> "Node":
        return Node(
            self.id,
            self.room,
            self.caps,
            self.kb,
            self.app.copy() if self.app is not None else None,
            dict(self.arrivals),
            dict(self.hwm),
        )


@dataclass(frozen=True)
class ScheduleEvent:
    time: int
    kind: str  # 'inject' | 'move' | 'join' | 'leave'
    node: str
    item: KnowledgeItem | None = None
    room: str | None = None
    caps: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Record:
    """One line of the run trace: ``tick | kind | key=value ...``."""

    tick: int
    kind: str
    fields: tuple[tuple[str, str], ...] = ()

    def line(self) -> str:
        payload = " ".join("%s=%s" % (k, v) for k, v in self.fields)
        return "%d | %s | %s" % (self.tick, self.kind, payload)


@dataclass
class Trace:
    records: list[Record] = field(default_factory=list)
    initial: "World | None" = None
    horizon: int = 0
    final: "World | None" = None

    def serialize(self) -> str:
        return "".join(r.line() + "\n" for r in self.records)

    def add(self, tick: int, kind: str, *fields: tuple[str, str]) -> None:
        self.records.append(Record(tick, kind, tuple(fields)))


class World:
    """Mutable simulation container; ``run`` operates on a private copy."""

    def __init__(
        self,
        topology: Topology,
        order: ReplacementOrder | None = None,
        policy: ExchangePolicy | None = None,
        theory: Theory | None = None,
        seed: int = 0,
    ):
        self.topology = topology
        self.order = order or ReplacementOrder.empty()
        self.policy = policy or ExchangePolicy()
        self.theory = theory
        self.seed = seed
        self.clock = 0
        self.nodes: dict[str, Node] = {}
        self.schedule: list[ScheduleEvent] = []
        self.priority: dict[str, int] = {}

    def add_node(self, node: Node) -> None:
        if node.id in self.nodes:
            raise TopologyError("duplicate node id %s" % node.id)
        if node.room not in self.topology.rooms:
            raise TopologyError("node %s placed in unknown room %s" % (node.id, node.room))
        if self.theory is not None and node.app is None:
            node.app = InferenceState()
        self.nodes[node.id] = node

    def add_event(self, event: ScheduleEvent) -> None:
        if event.kind in ("move", "join") and event.room not in self.topology.rooms:
            raise TopologyError("scheduled %s targets unknown room %s" % (event.kind, event.room))
        self.schedule.append(event)

    def node_order(self) -> list[str]:
        return sorted(self.nodes, key=lambda n: (self.priority.get(n, 0), n))

    def placement(self) -> dict[str, str]:
        return {n.id: n.room for n in self.nodes.values()}

    def copy(self) -> "World":
        w = World(self.topology, self.order, self.policy, self.theory, self.seed)
        w.clock = self.clock
        w.nodes = {nid: n.copy() for nid, n in self.nodes.items()}
        w.schedule = list(self.schedule)
        w.priority = dict(self.priority)
        return w


def contacts_at(topology: Topology, placement: dict[str, str], t: int) -> list[tuple[str, str]]:
    """Unordered node pairs currently able to exchange (same or adjacent rooms)."""
    for nid, room in placement.items():
        if room not in topology.rooms:
            raise TopologyError("node %s is in unknown room %s" % (nid, room))
    ids = sorted(placement)
    pairs = []
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            if topology.in_contact(placement[a], placement[b]):
                pairs.append((a, b))
    return pairs


def _insert_into_node(
    world: World,
    trace: Trace,
    node: Node,
    item: KnowledgeItem,
    now: int,
    cause: str,
) -> None:
    outcome = kb_insert(node.kb, item, world.order, now)
    node.kb = outcome.kb
    if outcome.added is None:
        if outcome.dropped == "stale":
            trace.add(now, "drop", ("node", node.id), ("item", item.render()), ("reason", "stale"))
        elif outcome.dropped == "expired":
            trace.add(now, "drop", ("node", node.id), ("item", item.render()), ("reason", "expired"))
        return
    node.arrivals[item.key] = now
    for gone in outcome.removed:
        node.arrivals.pop(gone.key, None)
        trace.add(now, "replace", ("node", node.id), ("removed", gone.render()), ("by", item.render()))
    trace.add(now, "insert", ("node", node.id), ("item", item.render()), ("cause", cause))
    _check_delivery(trace, node, item, now)


def _check_delivery(trace: Trace, node: Node, item: KnowledgeItem, now: int) -> None:
    """Report the first fact satisfying each goal (holes are existential)."""
    if node.app is None:
        return
    if item.kind is Kind.FACT:
        for goal in node.kb.goals():
            if goal.term not in node.app.delivered and covers(goal.term, item.term):
                node.app.delivered.add(goal.term)
                trace.add(now, "deliver", ("node", node.id), ("goal", repr(goal.term)), ("fact", repr(item.term)))
    else:
        for fact in node.kb.facts():
            if item.term not in node.app.delivered and covers(item.term, fact.term):
                node.app.delivered.add(item.term)
                trace.add(now, "deliver", ("node", node.id), ("goal", repr(item.term)), ("fact", repr(fact.term)))
                break


def _purge_node(world: World, trace: Trace, node: Node, now: int) -> None:
    outcome = kb_purge(node.kb, now)
    node.kb = outcome.kb
    for item in outcome.removed:
        node.arrivals.pop(item.key, None)
        trace.add(now, "purge", ("node", node.id), ("item", item.render()))


def _offered(node: Node, snapshot: KnowledgeBase, policy: ExchangePolicy, peer: str) -> list[KnowledgeItem]:
    items = list(snapshot)
    if policy.variant is Variant.PUSH_DELTA:
        # >= keeps items that arrived from a third party during the tick of
        # the previous contact; re-offers are absorbed by merge idempotence.
        mark = node.hwm.get(peer)
        if mark is not None:
            items = [it for it in items if node.arrivals.get(it.key, 0) >= mark]
    return sorted(items, key=KnowledgeItem.sort_key)


def exchange(
    world: World,
    trace: Trace,
    a: Node,
    b: Node,
    now: int,
    snapshot_a: KnowledgeBase | None = None,
    snapshot_b: KnowledgeBase | None = None,
) -> None:
    """One pairwise knowledge exchange; offers are drawn from the given
    tick-start snapshots (defaulting to the live bases)."""
    offer_a = _offered(a, snapshot_a if snapshot_a is not None else a.kb, world.policy, b.id)
    offer_b = _offered(b, snapshot_b if snapshot_b is not None else b.kb, world.policy, a.id)
    before_a, before_b = a.kb, b.kb
    marker = len(trace.records)
    for item in offer_b:
        _insert_into_node(world, trace, a, item, now, cause="exchange")
    for item in offer_a:
        _insert_into_node(world, trace, b, item, now, cause="exchange")
    a.hwm[b.id] = now
    b.hwm[a.id] = now
    if a.kb is not before_a or b.kb is not before_b:
        trace.records.insert(
            marker,
            Record(now, "exchange", (("a", a.id), ("b", b.id), ("offered_a", str(len(offer_a))), ("offered_b", str(len(offer_b))))),
        )


def step(world: World, trace: Trace | None = None) -> World:
    """Advance the world by one tick: moves, exchanges, injections, app steps."""
    trace = trace if trace is not None else Trace()
    world.clock += 1
    now = world.clock

    for event in [e for e in world.schedule if e.time == now]:
        if event.kind == "move":
            node = world.nodes.get(event.node)
            if node is not None:
                node.room = event.room
                trace.add(now, "move", ("node", node.id), ("room", event.room))
        elif event.kind == "join":
            node = Node(event.node, event.room, event.caps)
            world.add_node(node)
            trace.add(now, "join", ("node", node.id), ("room", node.room))
        elif event.kind == "leave":
            if world.nodes.pop(event.node, None) is not None:
                trace.add(now, "leave", ("node", event.node))

    if now % world.policy.period == 0:
        ranked = world.node_order()
        for nid in ranked:
            _purge_node(world, trace, world.nodes[nid], now)
        snapshots = {nid: world.nodes[nid].kb for nid in ranked}
        placement = world.placement()
        rank = {nid: i for i, nid in enumerate(ranked)}
        pairs = sorted(contacts_at(world.topology, placement, now), key=lambda p: (rank[p[0]], rank[p[1]]))
        for a_id, b_id in pairs:
            exchange(world, trace, world.nodes[a_id], world.nodes[b_id], now, snapshots[a_id], snapshots[b_id])

    for event in [e for e in world.schedule if e.time == now and e.kind == "inject"]:
        node = world.nodes.get(event.node)
        if node is None:
            continue
        trace.add(now, "inject", ("node", node.id), ("item", event.item.render()))
        _insert_into_node(world, trace, node, event.item, now, cause="inject")

    if world.theory is not None:
        for nid in world.node_order():
            node = world.nodes[nid]
            if node.app is None:
                continue
            try:
                result = infer_step(node.kb, node.app, world.theory, now, node.id, node.caps)
            except Exception as exc:  # a broken app must not stall the world
                trace.add(now, "app_error", ("node", node.id), ("error", type(exc).__name__))
                continue
            for err in result.errors:
                trace.add(now, "infer_error", ("node", node.id), ("detail", err))
            for item in result.items:
                cause = "derive" if item.kind is Kind.FACT else "expand"
                _insert_into_node(world, trace, node, item, now, cause=cause)
            for goal in result.ready_primitives:
                outcome = execute_primitive(node.app, node.caps, goal, world.theory, now, node.id)
                if outcome.fact is not None:
                    trace.add(now, "execute", ("node", node.id), ("goal", repr(goal)), ("fact", outcome.fact.render()))
                    _insert_into_node(world, trace, node, outcome.fact, now, cause="execute")
    return world


def run(world: World, horizon: int) -> Trace:
    """Run ``horizon`` ticks on a copy of the world and return the trace."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    initial = world.copy()
    active = world.copy()
    trace = Trace(initial=initial, horizon=horizon)
    for _ in range(horizon):
        step(active, trace)
    trace.final = active
    return trace


@dataclass(frozen=True)
class Consistency:
    consistent: bool
    missing: dict  # node id -> tuple of item renderings absent from that node

    def __bool__(self) -> bool:
        return self.consistent


def consistency_check(world: World) -> Consistency:
    """All node bases equal after purging at the current clock?"""
    now = world.clock
    normalized = {nid: kb_purge(world.nodes[nid].kb, now).kb.keys() for nid in world.node_order()}
    union = frozenset().union(*normalized.values()) if normalized else frozenset()
    missing = {}
    for nid, keys in normalized.items():
        absent = union - keys
        if absent:
            missing[nid] = tuple(sorted("%s %r" % (k.value, t) for k, t in absent))
    return Consistency(not missing, missing)
