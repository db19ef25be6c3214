"""Local knowledge bases: timestamped fact/goal items, TTL purging, and
replacement-order conflict resolution.

A knowledge base holds at most one item per (kind, term) key and only
items that are maximal under the active replacement order, so merging
bases is a semilattice join: commutative, associative, idempotent.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .terms import (
    Atom,
    Term,
    TermSyntaxError,
    Var,
    freeze,
    term_sort_key,
    _parse_term_tokens,
    _tokenize,
)


class Kind(enum.Enum):
    FACT = "fact"
    GOAL = "goal"

    def __lt__(self, other: "Kind") -> bool:
        return self.value < other.value


class Ordering(enum.Enum):
    LESS = "less"
    GREATER = "greater"
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class KnowledgeItem:
    """A fact or goal term with creation tick, optional TTL, and origin node.

    The term is canonicalized on construction (variables become holes).
    Identity for deduplication is (kind, term); created/ttl/origin are
    metadata.
    """

    kind: Kind
    term: Term
    created: int
    ttl: int | None = None
    origin: str = "?"

    def __post_init__(self):
        object.__setattr__(self, "term", freeze(self.term))
        if self.ttl is not None and self.ttl <= 0:
            raise ValueError("ttl must be positive, got %r" % (self.ttl,))
        if self.kind is Kind.FACT and not self.term.is_strict_ground():
            raise ValueError("facts must be fully ground: %r" % (self.term,))

    @property
    def key(self) -> tuple[Kind, Term]:
        return (self.kind, self.term)

    @property
    def expiry(self) -> int | None:
        return None if self.ttl is None else self.created + self.ttl

    def expired(self, now: int) -> bool:
        return self.expiry is not None and self.expiry <= now

    def sort_key(self) -> tuple:
        return (self.created, self.kind.value, term_sort_key(self.term), self.origin)

    def render(self) -> str:
        return "%s %r" % (self.kind.value, self.term)


def _pattern_match(
    args: tuple[Atom, ...],
    has_rest: bool,
    term: Term,
    env: dict[Var, Atom],
) -> dict[Var, Atom] | None:
    if has_rest:
        if term.arity < len(args):
            return None
    elif term.arity != len(args):
        return None
    env = dict(env)
    for p, g in zip(args, term.args):
        if isinstance(p, Var):
            if p in env and env[p] != g:
                return None
            env[p] = g
        elif p != g:
            return None
    return env


@dataclass(frozen=True)
class ReplacementRule:
    """One guarded pattern pair: ``lower < upper if T < T'``.

    ``lower_preds`` lists every predicate the lower pattern may match
    (more than one name plays the role of a predicate wildcard).  The
    guard is a strict integer comparison between one variable of each
    side, which makes the induced relation irreflexive by construction.
    """

    name: str
    kind: Kind
    lower_preds: frozenset[str]
    lower_args: tuple[Atom, ...]
    lower_rest: bool
    upper_pred: str
    upper_args: tuple[Atom, ...]
    upper_rest: bool
    guard_lower: Var
    guard_upper: Var

    def __post_init__(self):
        lower_vars = {a for a in self.lower_args if isinstance(a, Var)}
        upper_vars = {a for a in self.upper_args if isinstance(a, Var)}
        if self.guard_lower not in lower_vars:
            raise ValueError("rule %s: guard variable %r not in lower pattern" % (self.name, self.guard_lower))
        if self.guard_upper not in upper_vars:
            raise ValueError("rule %s: guard variable %r not in upper pattern" % (self.name, self.guard_upper))
        if self.guard_lower == self.guard_upper:
            raise ValueError("rule %s: guard must compare two distinct variables" % self.name)

    def below(self, a: KnowledgeItem, b: KnowledgeItem) -> bool:
        """True when a is strictly below b under this rule."""
        if a.kind is not self.kind or b.kind is not self.kind:
            return False
        if a.term.pred not in self.lower_preds or b.term.pred != self.upper_pred:
            return False
        env = _pattern_match(self.lower_args, self.lower_rest, a.term, {})
        if env is None:
            return False
        env = _pattern_match(self.upper_args, self.upper_rest, b.term, env)
        if env is None:
            return False
        lo, hi = env[self.guard_lower], env[self.guard_upper]
        return isinstance(lo, int) and isinstance(hi, int) and lo < hi


class OrderConflictError(ValueError):
    """A rule set related two items as Less in both directions."""


@dataclass(frozen=True)
class ReplacementOrder:
    rules: tuple[ReplacementRule, ...] = ()

    @classmethod
    def empty(cls) -> "ReplacementOrder":
        return cls()

    def __bool__(self) -> bool:
        return bool(self.rules)

    def _below(self, a: KnowledgeItem, b: KnowledgeItem) -> bool:
        return any(rule.below(a, b) for rule in self.rules)

    def compare(self, a: KnowledgeItem, b: KnowledgeItem) -> Ordering:
        less = self._below(a, b)
        greater = self._below(b, a)
        if less and greater:
            raise OrderConflictError("items %r and %r are below each other" % (a.term, b.term))
        if less:
            return Ordering.LESS
        if greater:
            return Ordering.GREATER
        return Ordering.INCOMPARABLE


def order_compare(order: ReplacementOrder, a: KnowledgeItem, b: KnowledgeItem) -> Ordering:
    return order.compare(a, b)


_RULE_RE = re.compile(
    r"^\s*(?P<name>[A-Za-z0-9_.\-]+)\s*:\s*(?P<lower>.+?)\s*<\s*(?P<upper>.+?)\s+"
    r"if\s+(?P<gl>[A-Z][A-Za-z0-9_]*)\s*<\s*(?P<gu>[A-Z][A-Za-z0-9_]*)\s*$"
)


def _parse_side(text: str) -> tuple[Kind, frozenset[str], tuple[Atom, ...], bool]:
    text = text.strip()
    m = re.match(r"^(fact|goal)\s+", text)
    if not m:
        raise TermSyntaxError("replacement pattern must start with 'fact' or 'goal': %r" % text)
    kind = Kind(m.group(1))
    rest = text[m.end():].strip()
    if rest.startswith("{"):
        close = rest.index("}")
        preds = frozenset(p.strip() for p in rest[1:close].split(","))
        if not all(p and p[0].isupper() for p in preds):
            raise TermSyntaxError("predicate set must list uppercase names: %r" % rest[: close + 1])
        rest = "Any" + rest[close + 1:]
    else:
        preds = None
    has_rest = False
    if re.search(r",\s*\.\.\.\s*\)\s*$", rest) or re.search(r"\(\s*\.\.\.\s*\)\s*$", rest):
        has_rest = True
        rest = re.sub(r",?\s*\.\.\.\s*\)\s*$", ")", rest)
    term, leftover = _parse_term_tokens(_tokenize(rest))
    if leftover:
        raise TermSyntaxError("trailing input in replacement pattern: %r" % leftover[0][1])
    if preds is None:
        preds = frozenset([term.pred])
    return kind, preds, term.args, has_rest


def parse_replacement_rule(line: str) -> ReplacementRule:
    """Parse the textual form, e.g.
    ``O1: fact Position(T, R, ...) < fact Position(T2, R, ...) if T < T2``.

    The guard must be a strict ``<`` between a lower-side and an
    upper-side variable.  A ``{A,B}`` set before the argument list lets
    the lower pattern match several predicate names.
    """
    m = _RULE_RE.match(line)
    if not m:
        raise TermSyntaxError("malformed replacement rule: %r" % line)
    lk, lpreds, largs, lrest = _parse_side(m.group("lower"))
    uk, upreds, uargs, urest = _parse_side(m.group("upper"))
    if lk is not uk:
        raise TermSyntaxError("replacement rules relate items of one kind: %r" % line)
    if len(upreds) != 1:
        raise TermSyntaxError("upper pattern must name a single predicate: %r" % line)
    return ReplacementRule(
        name=m.group("name"),
        kind=lk,
        lower_preds=lpreds,
        lower_args=largs,
        lower_rest=lrest,
        upper_pred=next(iter(upreds)),
        upper_args=uargs,
        upper_rest=urest,
        guard_lower=Var(m.group("gl")),
        guard_upper=Var(m.group("gu")),
    )


def parse_order(lines: Iterable[str]) -> ReplacementOrder:
    rules = [parse_replacement_rule(ln) for ln in lines if ln.strip() and not ln.strip().startswith("#")]
    return ReplacementOrder(tuple(rules))


@dataclass(frozen=True)
class KnowledgeBase:
    """An immutable set of knowledge items, deduplicated by (kind, term)
    and containing only order-maximal elements."""

    items: tuple[KnowledgeItem, ...] = ()
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def empty(cls) -> "KnowledgeBase":
        return cls()

    @classmethod
    def _make(cls, items: Iterable[KnowledgeItem]) -> "KnowledgeBase":
        ordered = tuple(sorted(items, key=KnowledgeItem.sort_key))
        return cls(ordered, {it.key: it for it in ordered})

    def __iter__(self) -> Iterator[KnowledgeItem]:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, item: KnowledgeItem) -> bool:
        return self._index.get(item.key) is not None

    def get(self, key: tuple[Kind, Term]) -> KnowledgeItem | None:
        return self._index.get(key)

    def keys(self) -> frozenset[tuple[Kind, Term]]:
        return frozenset(self._index.keys())

    def facts(self) -> tuple[KnowledgeItem, ...]:
        return tuple(it for it in self.items if it.kind is Kind.FACT)

    def goals(self) -> tuple[KnowledgeItem, ...]:
        return tuple(it for it in self.items if it.kind is Kind.GOAL)

    def fact_terms(self) -> frozenset[Term]:
        return frozenset(it.term for it in self.items if it.kind is Kind.FACT)


def _prefer(a: KnowledgeItem, b: KnowledgeItem) -> KnowledgeItem:
    """Resolve duplicate (kind, term) keys deterministically.

    The copy expiring later wins so that, after full propagation, every
    node purges the shared item at the same tick; the (created, origin)
    tiebreak keeps the choice symmetric.
    """
    ea = a.expiry if a.expiry is not None else float("inf")
    eb = b.expiry if b.expiry is not None else float("inf")
    if ea != eb:
        return a if ea > eb else b
    return a if (a.created, a.origin) <= (b.created, b.origin) else b


@dataclass(frozen=True)
class InsertOutcome:
    kb: KnowledgeBase
    added: KnowledgeItem | None = None
    removed: tuple[KnowledgeItem, ...] = ()
    dropped: str | None = None  # 'expired' | 'stale' | 'duplicate' | 'refreshed'


def kb_insert(kb: KnowledgeBase, item: KnowledgeItem, order: ReplacementOrder, now: int) -> InsertOutcome:
    """Insert one item, dropping it if stale or expired and evicting
    everything strictly below it."""
    if item.expired(now):
        return InsertOutcome(kb, dropped="expired")
    existing = kb.get(item.key)
    if existing is not None:
        winner = _prefer(existing, item)
        if winner is existing:
            return InsertOutcome(kb, dropped="duplicate")
        rest = [it for it in kb if it.key != item.key]
        return InsertOutcome(KnowledgeBase._make(rest + [item]), dropped="refreshed")
    removed = []
    for it in kb:
        cmp = order.compare(item, it)
        if cmp is Ordering.LESS:
            return InsertOutcome(kb, dropped="stale")
        if cmp is Ordering.GREATER:
            removed.append(it)
    evicted = {it.key for it in removed}
    keep = [it for it in kb if it.key not in evicted]
    return InsertOutcome(KnowledgeBase._make(keep + [item]), added=item, removed=tuple(removed))


@dataclass(frozen=True)
class PurgeOutcome:
    kb: KnowledgeBase
    removed: tuple[KnowledgeItem, ...] = ()


def kb_purge(kb: KnowledgeBase, now: int) -> PurgeOutcome:
    """Remove exactly the items whose TTL has elapsed (created + ttl <= now)."""
    removed = tuple(it for it in kb if it.expired(now))
    if not removed:
        return PurgeOutcome(kb)
    return PurgeOutcome(KnowledgeBase._make(it for it in kb if not it.expired(now)), removed)


def kb_merge(a: KnowledgeBase, b: KnowledgeBase, order: ReplacementOrder, now: int) -> KnowledgeBase:
    """Fold every item of b into a after purging both sides at ``now``."""
    merged = kb_purge(a, now).kb
    for item in kb_purge(b, now).kb:
        merged = kb_insert(merged, item, order, now).kb
    return merged
