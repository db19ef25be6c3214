"""Independent reference implementations used as test oracles.

These deliberately avoid the engine code paths they check: the closure
oracle enumerates raw Herbrand substitutions instead of joining matches,
and the attractor oracle finds cycles by trajectory iteration instead of
functional-graph walking.
"""

from __future__ import annotations

import itertools
from collections import Counter

from immunet.logic import Theory
from immunet.terms import Term, Var


def herbrand_closure(theory: Theory, base: set[Term]) -> frozenset[Term]:
    """Fixpoint by generate-and-test over every substitution of clause
    variables by observed constants."""
    constants = sorted(
        {a for t in base for a in t.args}
        | {
            a
            for c in theory.clauses
            for t in (c.head, *c.body)
            for a in t.args
            if not isinstance(a, Var)
        },
        key=repr,
    )
    known = set(base)
    changed = True
    while changed:
        changed = False
        for clause in theory.clauses:
            names = sorted(
                {v for t in (clause.head, *clause.body) for v in t.variables()},
                key=lambda v: v.name,
            )
            for combo in itertools.product(constants, repeat=len(names)):
                env = dict(zip(names, combo))
                grounded_body = [
                    Term(b.pred, tuple(env.get(a, a) if isinstance(a, Var) else a for a in b.args))
                    for b in clause.body
                ]
                if all(b in known for b in grounded_body):
                    head = Term(
                        clause.head.pred,
                        tuple(env.get(a, a) if isinstance(a, Var) else a for a in clause.head.args),
                    )
                    if head not in known:
                        known.add(head)
                        changed = True
    return frozenset(known)


def trajectory_attractors(update, states):
    """Attractors by brute trajectory: iterate |states| times to land inside
    the attractor, then walk the cycle.  Returns {cycle frozenset: basin}."""
    basin: Counter = Counter()
    cycles = {}
    for s in states:
        t = s
        for _ in range(len(states)):
            t = update(t)
        cyc = [t]
        u = update(t)
        while u != t:
            cyc.append(u)
            u = update(u)
        key = frozenset(cyc)
        cycles[key] = tuple(cyc)
        basin[key] += 1
    return cycles, basin
