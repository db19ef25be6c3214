"""immunet: deterministic simulators for immune-inspired distributed systems.

Four engines under one roof: knowledge bases with replacement orders and
TTL exchanged opportunistically between nodes, distributed Horn-clause
inference driving device commands, multiset rewriting of located cell
objects with reachability search, and boolean-network attractor analysis
of cytokine signaling.
"""

from .knowledge import (
    Kind,
    KnowledgeBase,
    KnowledgeItem,
    Ordering,
    ReplacementOrder,
    ReplacementRule,
    kb_insert,
    kb_merge,
    kb_purge,
    order_compare,
    parse_order,
    parse_replacement_rule,
)
from .logic import (
    HornClause,
    InferenceState,
    Theory,
    execute_primitive,
    infer_step,
    oracle_closure,
    parse_theory,
)
from .netsim import (
    Consistency,
    ExchangePolicy,
    Node,
    ScheduleEvent,
    Topology,
    Trace,
    Variant,
    World,
    consistency_check,
    contacts_at,
    exchange,
    run,
    step,
)
from .properties import PropertyReport, check_properties
from .rewriting import (
    BoundPair,
    BudgetExceeded,
    CellObject,
    RewriteRule,
    SystemState,
    apply_rule,
    immune_ruleset,
    match_rule,
    parse_rules,
    parse_state,
    rewrite_random,
    search_reachable,
    signal_predicate,
)
from .boolnet import (
    Attractor,
    BooleanNetwork,
    NetState,
    RefuseExhaustive,
    attractors,
    cytokine_network,
    feedback_loops,
    parse_network,
    update_sync,
)
from .scenarios import robot_scenario, truncated_robot_scenario
from .terms import HOLE, Term, Var, parse_term

__version__ = "0.1.0"
