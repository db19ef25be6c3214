"""Built-in and randomly generated simulation scenarios.

The robot scenario wires three robots into a four-room corridor: a
requester posts an interest goal, a motion sensor reports a detection,
and a camera robot shuttles between rooms, takes the snapshot, and
ferries the derived image back.  The random generators produce small
worlds and theories for the property sweeps.
"""

from __future__ import annotations

import random
from collections import deque

from .knowledge import Kind, KnowledgeItem, ReplacementOrder, kb_insert, parse_order
from .logic import HornClause, Theory, parse_theory
from .netsim import ExchangePolicy, Node, ScheduleEvent, Topology, Variant, World
from .terms import Term, Var, parse_term

ROBOT_THEORY_TEXT = """\
theory robot.

pred Interest/2.
pred Image/2.
pred Detect/2.
pred Snapshot/3.
pred TakeSnapshot/3.
pred Position/3.

# A fresh interest session spawns the camera command for that session and
# an image request for the area; the session id rides in the command goal
# so a later interest can displace it.
Interest(T, A) :- TakeSnapshot(T, A, I), Image(A, I).
Image(A, I) :- Detect(T, A), Snapshot(T2, A, I).

primitive TakeSnapshot/3 requires camera yields Snapshot/3 out(3) fresh img.
"""

ROBOT_ORDER_TEXT = """\
O1: fact Position(T, R, ...) < fact Position(T2, R, ...) if T < T2
O2: goal {Interest, TakeSnapshot}(T, ...) < goal Interest(T2, ...) if T < T2
"""


def robot_theory() -> Theory:
    return parse_theory(ROBOT_THEORY_TEXT, name="robot")


def robot_order() -> ReplacementOrder:
    return parse_order(ROBOT_ORDER_TEXT.splitlines())


def robot_scenario(seed: int = 1) -> tuple[World, Theory]:
    """Three robots in a four-room corridor; the camera robot shuttles."""
    theory = robot_theory()
    topology = Topology.build(
        ["room1", "room2", "room3", "room4"],
        [("room1", "room2"), ("room2", "room3"), ("room3", "room4")],
    )
    world = World(topology, robot_order(), ExchangePolicy(Variant.PUSH_ALL, 1), theory, seed=seed)
    world.add_node(Node("r1", "room1"))
    world.add_node(Node("r2", "room2", frozenset(["camera"])))
    world.add_node(Node("r3", "room4", frozenset(["motion"])))
    seed_item = KnowledgeItem(Kind.GOAL, parse_term("Interest(9, area_a)"), created=0, origin="r1")
    world.nodes["r1"].kb = kb_insert(world.nodes["r1"].kb, seed_item, world.order, 0).kb
    world.add_event(
        ScheduleEvent(2, "inject", "r3", item=KnowledgeItem(Kind.FACT, parse_term("Detect(2, area_a)"), created=2, origin="r3"))
    )
    world.add_event(ScheduleEvent(4, "move", "r2", room="room3"))
    world.add_event(ScheduleEvent(6, "move", "r2", room="room2"))
    return world, theory


def truncated_robot_scenario(seed: int = 1) -> tuple[World, Theory]:
    """Two-node cut of the robot scenario: requester plus camera, with the
    detection rerouted to the camera robot."""
    theory = robot_theory()
    topology = Topology.build(["room1", "room2"], [("room1", "room2")])
    world = World(topology, robot_order(), ExchangePolicy(Variant.PUSH_ALL, 1), theory, seed=seed)
    world.add_node(Node("r1", "room1"))
    world.add_node(Node("r2", "room2", frozenset(["camera"])))
    seed_item = KnowledgeItem(Kind.GOAL, parse_term("Interest(9, area_a)"), created=0, origin="r1")
    world.nodes["r1"].kb = kb_insert(world.nodes["r1"].kb, seed_item, world.order, 0).kb
    world.add_event(
        ScheduleEvent(2, "inject", "r2", item=KnowledgeItem(Kind.FACT, parse_term("Detect(2, area_a)"), created=2, origin="r2"))
    )
    return world, theory


# ---------------------------------------------------------------------------
# random scenario generation for the property sweeps


def random_theory(rng: random.Random, max_clauses: int = 10, max_constants: int = 12) -> tuple[Theory, list[str], list[Term]]:
    """A small random Horn theory plus its constant pool and some ground
    observation facts.

    Predicates split into extensional ones (sensor-style, never a clause
    head; observations draw from these) and derivable ones.  Heads only
    use body variables, so every derivation is ground by construction."""
    constants = ["c%d" % i for i in range(rng.randint(3, max_constants))]
    preds = {}
    for i in range(rng.randint(2, 5)):
        preds["P%d" % i] = rng.randint(1, 3)
    names = sorted(preds)
    split = rng.randint(1, len(names) - 1) if len(names) > 1 else 1
    observable = names[:split]
    derivable = names[split:] or names
    theory = Theory(name="random")
    theory.arities.update(preds)
    for _ in range(rng.randint(1, max_clauses)):
        body = []
        variables = []
        for _ in range(rng.randint(1, 2)):
            p = rng.choice(names)
            args = []
            for _ in range(preds[p]):
                if variables and rng.random() < 0.6:
                    args.append(rng.choice(variables))
                else:
                    v = Var("V%d" % len(variables))
                    variables.append(v)
                    args.append(v)
            body.append(Term(p, tuple(args)))
        hp = rng.choice(derivable)
        head_args = tuple(
            rng.choice(variables) if rng.random() < 0.8 else rng.choice(constants)
            for _ in range(preds[hp])
        )
        theory.clauses.append(HornClause(Term(hp, head_args), tuple(body)))
    theory.validate()
    observations = []
    for _ in range(rng.randint(2, 6)):
        p = rng.choice(observable)
        observations.append(Term(p, tuple(rng.choice(constants) for _ in range(preds[p]))))
    return theory, constants, observations


def _shaped_topology(kind: str, n: int) -> Topology:
    rooms = ["room%d" % i for i in range(n)]
    if n == 1:
        edges: list[tuple[str, str]] = []
    elif kind == "line":
        edges = [(rooms[i], rooms[i + 1]) for i in range(n - 1)]
    elif kind == "ring":
        edges = [(rooms[i], rooms[(i + 1) % n]) for i in range(n)] if n > 2 else [(rooms[0], rooms[1])]
    elif kind == "clique":
        edges = [(rooms[i], rooms[j]) for i in range(n) for j in range(i + 1, n)]
    else:
        raise ValueError("unknown topology shape %r" % kind)
    return Topology.build(rooms, edges)


def random_inference_scenario(seed: int, max_nodes: int = 4, max_clauses: int = 10, max_constants: int = 12) -> tuple[World, Theory]:
    """A random world driving a random theory: empty replacement order,
    no TTL, push-all gossip on a random connected shape."""
    rng = random.Random(seed)
    theory, _, observations = random_theory(rng, max_clauses, max_constants)
    n = rng.randint(1, max_nodes)
    shape = rng.choice(["line", "ring", "clique"]) if n > 1 else "line"
    topology = _shaped_topology(shape, max(n, 1))
    world = World(topology, ReplacementOrder.empty(), ExchangePolicy(Variant.PUSH_ALL, 1), theory, seed=seed)
    ids = ["n%d" % i for i in range(n)]
    for i, nid in enumerate(ids):
        world.add_node(Node(nid, "room%d" % i))
    for k, term in enumerate(observations):
        target = rng.choice(ids)
        tick = rng.randint(1, 3)
        world.add_event(
            ScheduleEvent(tick, "inject", target, item=KnowledgeItem(Kind.FACT, term, created=tick, origin=target))
        )
    return world, theory


def convergence_scenario(shape: str, n: int, seed: int) -> tuple[World, Theory]:
    """One node per room on a line/ring/clique; all observations injected
    at tick 1 so arrival bounds are easy to state."""
    rng = random.Random(seed)
    theory, _, observations = random_theory(rng)
    topology = _shaped_topology(shape, n)
    world = World(topology, ReplacementOrder.empty(), ExchangePolicy(Variant.PUSH_ALL, 1), theory, seed=seed)
    ids = ["n%d" % i for i in range(n)]
    for i, nid in enumerate(ids):
        world.add_node(Node(nid, "room%d" % i))
    for term in observations:
        target = rng.choice(ids)
        world.add_event(ScheduleEvent(1, "inject", target, item=KnowledgeItem(Kind.FACT, term, created=1, origin=target)))
    return world, theory


def contact_diameter(world: World) -> int:
    """Diameter of the node contact graph at the current placement."""
    placement = world.placement()
    ids = sorted(placement)
    best = 0
    for src in ids:
        dist = {src: 0}
        queue = deque([src])
        while queue:
            cur = queue.popleft()
            for other in ids:
                if other not in dist and world.topology.in_contact(placement[cur], placement[other]):
                    dist[other] = dist[cur] + 1
                    queue.append(other)
        if len(dist) < len(ids):
            raise ValueError("contact graph is not connected")
        best = max(best, max(dist.values()))
    return best
