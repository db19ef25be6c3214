"""Run-level property checks: soundness, monotonicity, completeness, and
confluence of the distributed inference system.

Each check replays the traced world deterministically and reports PASS,
FAIL (with a counterexample), or NOT-APPLICABLE when the run does not
meet the property's side conditions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .knowledge import Kind, Ordering
from .logic import Theory, oracle_closure
from .netsim import Trace, World, contacts_at, step
from .terms import parse_term

PASS = "PASS"
FAIL = "FAIL"
NA = "NOT-APPLICABLE"


@dataclass(frozen=True)
class PropertyResult:
    name: str
    status: str
    detail: str = ""

    def line(self) -> str:
        return "%-12s %s%s" % (self.name, self.status, " (%s)" % self.detail if self.detail else "")


@dataclass
class PropertyReport:
    results: list[PropertyResult] = field(default_factory=list)

    def __getitem__(self, name: str) -> PropertyResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def failed(self) -> bool:
        return any(r.status == FAIL for r in self.results)

    def render(self) -> str:
        return "".join(r.line() + "\n" for r in self.results)


@dataclass
class Replay:
    """Per-tick view of a deterministic re-run of a traced world."""

    fact_sets: list[dict]        # tick -> {node id: frozenset of fact terms}
    final_keys: dict             # node id -> frozenset of (kind, term) keys
    observations: frozenset      # fact terms injected or produced by primitives
    contact_pairs: frozenset     # accumulated (a, b) pairs that were ever in contact
    ttl_seen: bool


def replay_run(world: World, horizon: int, theory: Theory) -> Replay:
    active = world.copy()
    ttl_seen = any(it.ttl is not None for n in active.nodes.values() for it in n.kb) or (
        active.theory is not None and active.theory.default_ttl is not None
    )
    # observations are facts of extensional predicates (never a clause head);
    # an injected fact of a derivable predicate is a claim, not a sensor
    # reading, and must justify itself through the closure
    head_preds = {c.head.pred for c in theory.clauses}
    observations = {
        it.term
        for n in active.nodes.values()
        for it in n.kb
        if it.kind is Kind.FACT and it.term.pred not in head_preds
    }
    for ev in active.schedule:
        if ev.kind == "inject" and ev.item is not None:
            ttl_seen = ttl_seen or ev.item.ttl is not None
            if ev.item.kind is Kind.FACT and ev.item.term.pred not in head_preds:
                observations.add(ev.item.term)
    contact_pairs: set[tuple[str, str]] = set()
    fact_sets: list[dict] = [{nid: n.kb.fact_terms() for nid, n in active.nodes.items()}]
    for _ in range(horizon):
        trace = Trace()
        step(active, trace)
        if active.clock % active.policy.period == 0:
            contact_pairs.update(contacts_at(active.topology, active.placement(), active.clock))
        for rec in trace.records:
            if rec.kind == "execute":
                rendered = dict(rec.fields)["fact"].split(" ", 1)[1]
                observations.add(parse_term(rendered))
        fact_sets.append({nid: n.kb.fact_terms() for nid, n in active.nodes.items()})
    final_keys = {nid: n.kb.keys() for nid, n in active.nodes.items()}
    return Replay(fact_sets, final_keys, frozenset(observations), frozenset(contact_pairs), ttl_seen)


def _contact_connected(world: World, pairs: frozenset) -> bool:
    ids = set(world.nodes)
    if len(ids) <= 1:
        return True
    adj: dict[str, set[str]] = {nid: set() for nid in ids}
    for a, b in pairs:
        if a in adj and b in adj:
            adj[a].add(b)
            adj[b].add(a)
    seen = set()
    stack = [next(iter(sorted(ids)))]
    while stack:
        nid = stack.pop()
        if nid in seen:
            continue
        seen.add(nid)
        stack.extend(adj[nid] - seen)
    return seen == ids


def check_properties(trace: Trace, theory: Theory) -> PropertyReport:
    """Check the four distributed-logic properties against a traced run."""
    if trace.initial is None:
        raise ValueError("trace does not carry its initial world")
    world = trace.initial
    replay = replay_run(world, trace.horizon, theory)
    closure = oracle_closure(theory, replay.observations)
    report = PropertyReport()

    # Soundness: every fact ever held anywhere is oracle-derivable.
    rogue = None
    for ticks in replay.fact_sets:
        for nid, facts in sorted(ticks.items()):
            for t in facts:
                if t not in closure.facts:
                    rogue = (nid, t)
                    break
            if rogue:
                break
        if rogue:
            break
    if rogue:
        report.results.append(PropertyResult("soundness", FAIL, "node %s holds underivable %r" % rogue))
    else:
        report.results.append(PropertyResult("soundness", PASS, "%d oracle facts" % len(closure.facts)))

    # Monotonicity: without replacement or TTL, fact sets never shrink.
    if world.order or replay.ttl_seen:
        report.results.append(PropertyResult("monotonicity", NA, "replacement order or TTL active"))
    else:
        shrink = None
        for t in range(1, len(replay.fact_sets)):
            prev, cur = replay.fact_sets[t - 1], replay.fact_sets[t]
            for nid in prev:
                if nid in cur and not prev[nid] <= cur[nid]:
                    shrink = (nid, t)
                    break
            if shrink:
                break
        if shrink:
            report.results.append(PropertyResult("monotonicity", FAIL, "node %s lost facts at tick %d" % shrink))
        else:
            report.results.append(PropertyResult("monotonicity", PASS))

    # Completeness: over a connected run, order-maximal oracle facts reach
    # every node by the final tick.
    if not _contact_connected(world, replay.contact_pairs):
        report.results.append(PropertyResult("completeness", NA, "contact graph not connected"))
    elif replay.ttl_seen:
        report.results.append(PropertyResult("completeness", NA, "TTL active"))
    elif not closure.complete:
        report.results.append(PropertyResult("completeness", NA, "oracle closure truncated"))
    else:
        required = _maximal_facts(world, closure.facts)
        hole = None
        for nid, facts in sorted(replay.fact_sets[-1].items()):
            absent = required - facts
            if absent:
                hole = (nid, sorted(map(repr, absent))[0])
                break
        if hole:
            report.results.append(PropertyResult("completeness", FAIL, "node %s never got %s" % hole))
        else:
            report.results.append(PropertyResult("completeness", PASS, "%d required facts" % len(required)))

    # Confluence: scheduling permutations agree on the final fact sets.
    perms = _schedules(sorted(world.nodes))
    baselines = None
    diverged = None
    for perm in perms:
        variant = world.copy()
        variant.priority = {nid: i for i, nid in enumerate(perm)}
        for _ in range(trace.horizon):
            step(variant, Trace())
        outcome = {nid: n.kb.fact_terms() for nid, n in variant.nodes.items()}
        if baselines is None:
            baselines = outcome
        elif outcome != baselines:
            diverged = perm
            break
    if diverged:
        report.results.append(PropertyResult("confluence", FAIL, "schedule %s diverges" % (diverged,)))
    else:
        report.results.append(PropertyResult("confluence", PASS, "%d schedules" % len(perms)))
    return report


def _maximal_facts(world: World, facts: frozenset) -> frozenset:
    """Oracle facts not strictly below another oracle fact under the order."""
    from .knowledge import KnowledgeItem

    items = [KnowledgeItem(Kind.FACT, t, created=0) for t in sorted(facts, key=repr)]
    out = []
    for a in items:
        below = any(world.order.compare(a, b) is Ordering.LESS for b in items if b is not a)
        if not below:
            out.append(a.term)
    return frozenset(out)


def _schedules(ids: list[str]) -> list[tuple[str, ...]]:
    perms = list(itertools.permutations(ids))
    return perms if len(perms) <= 6 else perms[:6]
