"""Goal-driven Horn-clause inference executed locally at each node.

Goals unifying with a clause head spawn the body atoms as subgoals;
clauses whose bodies are fully matched by facts derive their head as a
new fact; goals whose predicate is declared primitive are executed as
device commands and yield facts.  ``oracle_closure`` is the centralized
brute-force reference used by the property harness.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .knowledge import Kind, KnowledgeBase, KnowledgeItem
from .terms import (
    HOLE,
    Atom,
    Term,
    TermSyntaxError,
    Var,
    match,
    parse_term,
    subst,
    term_sort_key,
    unify_goal,
)


class TheoryError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else "line %d: %s" % (line, message))
        self.line = line


@dataclass(frozen=True)
class HornClause:
    head: Term
    body: tuple[Term, ...]

    def __repr__(self) -> str:
        return "%r :- %s." % (self.head, ", ".join(repr(b) for b in self.body))


@dataclass(frozen=True)
class Primitive:
    """A goal predicate executed as a device command.

    The result term gets the execution tick in position 1, copies the
    goal's remaining arguments, and mints fresh symbols for output
    positions left as holes.
    """

    goal_pred: str
    arity: int
    requires: str
    yields_pred: str
    outputs: frozenset[int]  # 1-indexed positions of the goal/result term
    fresh_prefix: str = "v"


@dataclass
class Theory:
    name: str = "theory"
    arities: dict[str, int] = field(default_factory=dict)
    outputs: dict[str, frozenset[int]] = field(default_factory=dict)
    clauses: list[HornClause] = field(default_factory=list)
    primitives: dict[str, Primitive] = field(default_factory=dict)
    default_ttl: int | None = None

    def validate(self) -> None:
        for c in self.clauses:
            if not c.body:
                raise TheoryError("clause with empty body: %r" % c)
            for t in (c.head, *c.body):
                declared = self.arities.setdefault(t.pred, t.arity)
                if declared != t.arity:
                    raise TheoryError("arity clash for %s: %d vs %d" % (t.pred, declared, t.arity))
            if c.head.pred in self.primitives:
                raise TheoryError("primitive predicate %s may not head a clause" % c.head.pred)
            body_vars = {v for b in c.body for v in b.variables()}
            out = self.outputs.get(c.head.pred, frozenset())
            for i, a in enumerate(c.head.args, start=1):
                if isinstance(a, Var) and a not in body_vars and i not in out:
                    raise TheoryError(
                        "head variable %s of %r is neither body-bound nor a declared output position" % (a, c.head)
                    )
        for p in self.primitives.values():
            declared = self.arities.setdefault(p.goal_pred, p.arity)
            if declared != p.arity:
                raise TheoryError("arity clash for primitive %s" % p.goal_pred)


_PRED_RE = re.compile(r"^pred\s+([A-Z][A-Za-z0-9_]*)\s*/\s*(\d+)(?:\s+output\(([\d,\s]+)\))?$")
_PRIM_RE = re.compile(
    r"^primitive\s+([A-Z][A-Za-z0-9_]*)\s*/\s*(\d+)\s+requires\s+([a-z][A-Za-z0-9_\-]*)"
    r"\s+yields\s+([A-Z][A-Za-z0-9_]*)\s*/\s*(\d+)(?:\s+out\(([\d,\s]+)\))?(?:\s+fresh\s+([a-z][A-Za-z0-9_]*))?$"
)


def parse_theory(text: str, name: str = "theory") -> Theory:
    """Parse a theory file: ``pred``/``primitive``/``ttl`` declarations and
    ``Head :- Body1, Body2.`` clauses, one statement per ``.``."""
    theory = Theory(name=name)
    pending = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        pending = (pending + " " + line).strip()
        while pending.endswith("."):
            stmt, pending = pending[:-1].strip(), ""
            try:
                _parse_statement(theory, stmt)
            except (TermSyntaxError, TheoryError, ValueError) as exc:
                raise TheoryError(str(exc), lineno) from exc
    if pending.strip():
        raise TheoryError("unterminated statement: %r" % pending)
    theory.validate()
    return theory


def _parse_statement(theory: Theory, stmt: str) -> None:
    if stmt.startswith("theory "):
        theory.name = stmt.split(None, 1)[1]
        return
    if stmt.startswith("ttl "):
        theory.default_ttl = int(stmt.split(None, 1)[1])
        return
    m = _PRED_RE.match(stmt)
    if m:
        pred, arity = m.group(1), int(m.group(2))
        theory.arities[pred] = arity
        if m.group(3):
            theory.outputs[pred] = frozenset(int(x) for x in m.group(3).split(","))
        return
    m = _PRIM_RE.match(stmt)
    if m:
        pred, arity = m.group(1), int(m.group(2))
        yields_pred, yields_arity = m.group(4), int(m.group(5))
        if yields_arity != arity:
            raise TheoryError("primitive %s and its result must share an arity" % pred)
        outs = frozenset(int(x) for x in m.group(6).split(",")) if m.group(6) else frozenset()
        theory.primitives[pred] = Primitive(
            goal_pred=pred,
            arity=arity,
            requires=m.group(3),
            yields_pred=yields_pred,
            outputs=outs,
            fresh_prefix=m.group(7) or "v",
        )
        theory.outputs.setdefault(pred, outs)
        return
    if ":-" in stmt:
        head_text, body_text = stmt.split(":-", 1)
        head = parse_term(head_text.strip())
        body = tuple(parse_term(b) for b in _split_atoms(body_text))
        theory.clauses.append(HornClause(head, body))
        return
    raise TheoryError("unrecognized statement: %r" % stmt)


def _split_atoms(text: str) -> list[str]:
    atoms, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            atoms.append(text[start:i].strip())
            start = i + 1
    tail = text[start:].strip()
    if tail:
        atoms.append(tail)
    return atoms


@dataclass
class InferenceState:
    """Per-node application state: expansion/derivation memos, the
    executed-primitive log, and delivery bookkeeping."""

    expanded: set = field(default_factory=set)   # goal terms already expanded
    emitted: set = field(default_factory=set)    # (kind, term) keys this node already emitted
    executed: set = field(default_factory=set)   # primitive goal terms already run
    delivered: set = field(default_factory=set)  # goal terms already reported satisfied
    errors: set = field(default_factory=set)     # (clause index, head term) pairs already reported
    links: dict = field(default_factory=dict)    # goal term -> tuple of subgoal terms
    minted: set = field(default_factory=set)     # fresh symbols produced here

    def copy(self) -> "InferenceState":
        return InferenceState(
            set(self.expanded),
            set(self.emitted),
            set(self.executed),
            set(self.delivered),
            set(self.errors),
            {k: v for k, v in self.links.items()},
            set(self.minted),
        )


@dataclass(frozen=True)
class InferResult:
    items: tuple[KnowledgeItem, ...]
    ready_primitives: tuple[Term, ...]
    errors: tuple[str, ...]


def infer_step(
    kb: KnowledgeBase,
    state: InferenceState,
    theory: Theory,
    now: int,
    node_id: str,
    capabilities: frozenset[str] = frozenset(),
) -> InferResult:
    """One local inference round: expand goals, derive facts, and collect
    primitive goals this node is able to execute.

    Deterministic: items are visited in knowledge-base order and clauses
    in theory order.  Emission is memoized per node so quiescent ticks
    produce nothing.
    """
    new_items: list[KnowledgeItem] = []
    errors: list[str] = []

    def emit(kind: Kind, term: Term) -> None:
        if (kind, term) in state.emitted:
            return
        state.emitted.add((kind, term))
        new_items.append(KnowledgeItem(kind, term, created=now, ttl=theory.default_ttl, origin=node_id))

    for goal in sorted(kb.goals(), key=lambda it: term_sort_key(it.term)):
        if goal.term in state.expanded or goal.term.pred in theory.primitives:
            continue
        state.expanded.add(goal.term)
        subgoals: list[Term] = []
        for clause in theory.clauses:
            env = unify_goal(goal.term, clause.head)
            if env is None:
                continue
            for atom in clause.body:
                sub = subst(atom, env, default=HOLE)
                subgoals.append(sub)
                emit(Kind.GOAL, sub)
        if subgoals:
            state.links[goal.term] = tuple(subgoals)

    facts = sorted(kb.fact_terms(), key=term_sort_key)
    for idx, clause in enumerate(theory.clauses):
        for env in _body_matches(clause.body, facts):
            head = subst(clause.head, env, default=None)
            if head.is_strict_ground():
                emit(Kind.FACT, head)
            elif (idx, head) not in state.errors:
                state.errors.add((idx, head))
                errors.append("clause %d derived non-ground fact %r" % (idx, head))

    ready: list[Term] = []
    for goal in sorted(kb.goals(), key=lambda it: term_sort_key(it.term)):
        prim = theory.primitives.get(goal.term.pred)
        if prim is None or prim.requires not in capabilities:
            continue
        if goal.term in state.executed or not _inputs_ground(prim, goal.term):
            continue
        ready.append(goal.term)

    return InferResult(tuple(new_items), tuple(ready), tuple(errors))


def _body_matches(body: Sequence[Term], facts: Sequence[Term]) -> list[dict[Var, Atom]]:
    envs: list[dict[Var, Atom]] = [{}]
    for atom in body:
        nxt: list[dict[Var, Atom]] = []
        for env in envs:
            for fact in facts:
                extended = match(atom, fact, env)
                if extended is not None:
                    nxt.append(extended)
        envs = nxt
        if not envs:
            break
    return envs


def _inputs_ground(prim: Primitive, goal: Term) -> bool:
    return all(
        goal.args[i - 1] != HOLE
        for i in range(2, prim.arity + 1)
        if i not in prim.outputs
    )


@dataclass(frozen=True)
class ExecOutcome:
    fact: KnowledgeItem | None
    status: str  # 'ok' | 'not_capable' | 'suppressed' | 'not_ready'


def execute_primitive(
    state: InferenceState,
    capabilities: frozenset[str],
    goal: Term,
    theory: Theory,
    now: int,
    node_id: str,
) -> ExecOutcome:
    """Run one primitive goal as a device command, yielding its result fact.

    The execution log suppresses repeats of the same ground goal term; a
    node lacking the required capability leaves the goal for others.
    """
    prim = theory.primitives[goal.pred]
    if prim.requires not in capabilities:
        return ExecOutcome(None, "not_capable")
    if goal in state.executed:
        return ExecOutcome(None, "suppressed")
    if not _inputs_ground(prim, goal):
        return ExecOutcome(None, "not_ready")
    args: list[Atom] = [now]
    for i in range(2, prim.arity + 1):
        a = goal.args[i - 1]
        if i in prim.outputs and a == HOLE:
            args.append(_fresh(state, prim.fresh_prefix, node_id, now))
        else:
            args.append(a)
    state.executed.add(goal)
    fact = KnowledgeItem(
        Kind.FACT, Term(prim.yields_pred, tuple(args)), created=now, ttl=theory.default_ttl, origin=node_id
    )
    return ExecOutcome(fact, "ok")


def _fresh(state: InferenceState, prefix: str, node_id: str, now: int) -> str:
    base = "%s_%s_%d" % (prefix, node_id, now)
    name, k = base, 1
    while name in state.minted:
        k += 1
        name = "%s_%d" % (base, k)
    state.minted.add(name)
    return name


@dataclass(frozen=True)
class Closure:
    facts: frozenset[Term]
    complete: bool
    depth: int


def oracle_closure(theory: Theory, facts: Iterable[Term], max_rounds: int = 10_000) -> Closure:
    """Least fixpoint of forward chaining over all clauses.

    Primitives are modeled as given input facts.  If the round budget is
    exhausted before the fixpoint the result is flagged incomplete.
    """
    known = set(facts)
    depth = 0
    for _ in range(max_rounds):
        ordered = sorted(known, key=term_sort_key)
        fresh = set()
        for clause in theory.clauses:
            for env in _body_matches(clause.body, ordered):
                head = subst(clause.head, env, default=None)
                if head.is_strict_ground() and head not in known:
                    fresh.add(head)
        if not fresh:
            return Closure(frozenset(known), True, depth)
        known |= fresh
        depth += 1
    return Closure(frozenset(known), False, depth)
