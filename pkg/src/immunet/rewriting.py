"""Multiset rewriting over located, attributed cell objects.

A system state maps locations to multisets of entities: bare signal
symbols, cell objects ``[Type - mods...]``, or bound pairs ``(a : b)``.
Rules replace one located sub-multiset with another; per-object rest
variables (``$macmods``) and per-compartment rest variables (``$pts``)
carry everything the rule does not mention.  The module ships the
immune-response rule base: the four published rules plus authored
bridging steps, with random execution and breadth-first reachability
search over canonicalized states.
"""

from __future__ import annotations

import random
import re
from collections import Counter, deque
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union


class RuleSyntaxError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else "line %d: %s" % (line, message))
        self.line = line


class StaleMatchError(ValueError):
    """The match was computed against a different state."""


class BudgetExceeded(RuntimeError):
    def __init__(self, explored: int, frontier: int):
        super().__init__("state budget exceeded after %d states (frontier %d)" % (explored, frontier))
        self.explored = explored
        self.frontier = frontier


@dataclass(frozen=True)
class CellObject:
    ctype: str
    mods: tuple[str, ...]  # sorted multiset

    @classmethod
    def make(cls, ctype: str, mods: Iterable[str]) -> "CellObject":
        return cls(ctype, tuple(sorted(mods)))

    def render(self) -> str:
        return "[%s - %s]" % (self.ctype, " ".join(self.mods)) if self.mods else "[%s -]" % self.ctype


@dataclass(frozen=True)
class BoundPair:
    left: CellObject
    right: CellObject

    def render(self) -> str:
        return "(%s : %s)" % (self.left.render(), self.right.render())


Entity = Union[str, CellObject, BoundPair]


def render_entity(e: Entity) -> str:
    return e if isinstance(e, str) else e.render()


def _entity_key(e: Entity) -> tuple:
    return (0, e) if isinstance(e, str) else (1, render_entity(e))


@dataclass(frozen=True)
class SystemState:
    """Locations mapped to sorted entity multisets; canonical by construction."""

    compartments: tuple[tuple[str, tuple[Entity, ...]], ...]

    @classmethod
    def make(cls, compartments: dict[str, Iterable[Entity]]) -> "SystemState":
        frozen = tuple(
            (loc, tuple(sorted(entities, key=_entity_key)))
            for loc, entities in sorted(compartments.items())
        )
        return cls(frozen)

    def as_dict(self) -> dict[str, list[Entity]]:
        return {loc: list(entities) for loc, entities in self.compartments}

    def contents(self, loc: str) -> tuple[Entity, ...]:
        for name, entities in self.compartments:
            if name == loc:
                return entities
        return ()

    def render(self) -> str:
        parts = []
        for loc, entities in self.compartments:
            inner = " ".join(render_entity(e) for e in entities)
            parts.append("{%s |%s}" % (loc, " " + inner if inner else ""))
        return " ".join(parts)

    def key(self) -> str:
        return self.render()


def check_wellformed(state: SystemState, signal_locs: frozenset[str] = frozenset(["Sig"])) -> list[str]:
    """Well-formedness violations: cell objects inside a signal compartment,
    or the mutually exclusive IL2-receptor levels present together."""
    problems = []
    for loc, entities in state.compartments:
        for e in entities:
            if loc in signal_locs and not isinstance(e, str):
                problems.append("%s holds non-signal entity %s" % (loc, render_entity(e)))
            cells = []
            if isinstance(e, CellObject):
                cells = [e]
            elif isinstance(e, BoundPair):
                cells = [e.left, e.right]
            for cell in cells:
                if "xIL2Ra.lo" in cell.mods and "xIL2Ra.hi" in cell.mods:
                    problems.append("%s expresses both IL2Ra levels" % cell.render())
    return problems


# ---------------------------------------------------------------------------
# patterns


@dataclass(frozen=True)
class CellPattern:
    ctype: str
    mods: tuple[str, ...]  # fixed modifier multiset
    rest: str | None       # rest variable for the remaining modifiers


@dataclass(frozen=True)
class PairPattern:
    left: CellPattern
    right: CellPattern


EntityPattern = Union[str, CellPattern, PairPattern]


@dataclass(frozen=True)
class CompartmentPattern:
    loc: str
    rest: str | None
    entities: tuple[EntityPattern, ...]


@dataclass(frozen=True)
class RewriteRule:
    label: str
    lhs: tuple[CompartmentPattern, ...]
    rhs: tuple[CompartmentPattern, ...]
    authored: bool = False

    def __post_init__(self):
        lhs_vars = _pattern_vars(self.lhs)
        rhs_vars = _pattern_vars(self.rhs)
        missing = rhs_vars - lhs_vars
        if missing:
            raise RuleSyntaxError("rule %s: right-hand variables %s never bound" % (self.label, sorted(missing)))


def _pattern_vars(side: tuple[CompartmentPattern, ...]) -> set[str]:
    out = set()
    for comp in side:
        if comp.rest:
            out.add(comp.rest)
        for ent in comp.entities:
            cells = []
            if isinstance(ent, CellPattern):
                cells = [ent]
            elif isinstance(ent, PairPattern):
                cells = [ent.left, ent.right]
            for c in cells:
                if c.rest:
                    out.add(c.rest)
    return out


# ---------------------------------------------------------------------------
# matching


@dataclass(frozen=True)
class Match:
    rule_label: str
    bindings: tuple[tuple[str, tuple], ...]  # rest variable -> bound multiset
    state_key: str
    successor: SystemState

    def binding(self, var: str):
        for name, value in self.bindings:
            if name == var:
                return value
        raise KeyError(var)


def _match_cell(pat: CellPattern, ent: Entity) -> tuple[str, ...] | None:
    """Return the rest-mod multiset when the pattern embeds in the entity."""
    if not isinstance(ent, CellObject) or ent.ctype != pat.ctype:
        return None
    have = Counter(ent.mods)
    need = Counter(pat.mods)
    if any(have[m] < c for m, c in need.items()):
        return None
    rest = have - need
    if pat.rest is None and rest:
        return None
    return tuple(sorted(rest.elements()))


def _match_entity(pat: EntityPattern, ent: Entity) -> dict[str, tuple] | None:
    if isinstance(pat, str):
        return {} if ent == pat else None
    if isinstance(pat, CellPattern):
        rest = _match_cell(pat, ent)
        if rest is None:
            return None
        return {pat.rest: rest} if pat.rest else {}
    if isinstance(pat, PairPattern):
        if not isinstance(ent, BoundPair):
            return None
        left = _match_cell(pat.left, ent.left)
        right = _match_cell(pat.right, ent.right)
        if left is None or right is None:
            return None
        env = {}
        if pat.left.rest:
            env[pat.left.rest] = left
        if pat.right.rest:
            env[pat.right.rest] = right
        return env
    raise TypeError(pat)


def _compartment_assignments(
    patterns: Sequence[EntityPattern], entities: Sequence[Entity]
) -> list[tuple[dict[str, tuple], list[int]]]:
    """All injective ways of matching the entity patterns against distinct
    positions of the compartment multiset."""
    results: list[tuple[dict[str, tuple], list[int]]] = []

    def extend(i: int, env: dict[str, tuple], used: list[int]):
        if i == len(patterns):
            results.append((dict(env), list(used)))
            return
        for j, ent in enumerate(entities):
            if j in used:
                continue
            got = _match_entity(patterns[i], ent)
            if got is None:
                continue
            env.update(got)
            used.append(j)
            extend(i + 1, env, used)
            used.pop()
            for k in got:
                env.pop(k, None)

    extend(0, {}, [])
    return results


def _build_cell(pat: CellPattern, env: dict[str, tuple]) -> CellObject:
    mods = list(pat.mods)
    if pat.rest:
        mods.extend(env[pat.rest])
    return CellObject.make(pat.ctype, mods)


def _build_entity(pat: EntityPattern, env: dict[str, tuple]) -> Entity:
    if isinstance(pat, str):
        return pat
    if isinstance(pat, CellPattern):
        return _build_cell(pat, env)
    return BoundPair(_build_cell(pat.left, env), _build_cell(pat.right, env))


def _apply(rule: RewriteRule, state: SystemState, env: dict[str, tuple], consumed: dict[str, list[int]]) -> SystemState:
    comps = state.as_dict()
    for comp_pat in rule.lhs:
        entities = comps.get(comp_pat.loc, [])
        used = set(consumed[comp_pat.loc])
        if comp_pat.rest is not None:
            # the unconsumed remainder rides in the rest binding and is put
            # back wherever the rhs mentions that variable
            comps[comp_pat.loc] = []
        else:
            comps[comp_pat.loc] = [e for j, e in enumerate(entities) if j not in used]
    for comp_pat in rule.rhs:
        bucket = comps.setdefault(comp_pat.loc, [])
        if comp_pat.rest:
            bucket.extend(env[comp_pat.rest])
        for ent_pat in comp_pat.entities:
            bucket.append(_build_entity(ent_pat, env))
    return SystemState.make(comps)


def match_rule(rule: RewriteRule, state: SystemState) -> list[Match]:
    """All distinct embeddings of the rule's left side, deduplicated by the
    successor state they produce, in canonical order."""
    comps = state.as_dict()
    partial: list[tuple[dict[str, tuple], dict[str, list[int]]]] = [({}, {})]
    for comp_pat in rule.lhs:
        entities = comps.get(comp_pat.loc)
        if entities is None:
            return []
        options = _compartment_assignments(comp_pat.entities, entities)
        if not options:
            return []
        grown = []
        for env, consumed in partial:
            for opt_env, used in options:
                if comp_pat.rest is None and len(used) != len(entities):
                    continue  # no rest variable: the pattern is the whole compartment
                merged = dict(env)
                merged.update(opt_env)
                if comp_pat.rest:
                    merged[comp_pat.rest] = tuple(
                        e for j, e in enumerate(entities) if j not in used
                    )
                nxt = dict(consumed)
                nxt[comp_pat.loc] = used
                grown.append((merged, nxt))
        partial = grown
        if not partial:
            return []
    seen: dict[str, Match] = {}
    for env, consumed in partial:
        successor = _apply(rule, state, env, consumed)
        k = successor.key()
        if k not in seen:
            seen[k] = Match(rule.label, tuple(sorted((v, tuple(b)) for v, b in env.items())), state.key(), successor)
    return [seen[k] for k in sorted(seen)]


def apply_rule(rule: RewriteRule, state: SystemState, match: Match) -> SystemState:
    """Replay a previously computed match; a match taken on another state is stale."""
    if match.state_key != state.key():
        raise StaleMatchError("match was computed against a different state")
    if match.rule_label != rule.label:
        raise StaleMatchError("match belongs to rule %s" % match.rule_label)
    return match.successor


def successors(rules: Sequence[RewriteRule], state: SystemState) -> list[tuple[str, SystemState]]:
    out = []
    for rule in sorted(rules, key=lambda r: r.label):
        for m in match_rule(rule, state):
            out.append((rule.label, m.successor))
    return out


def rewrite_random(
    state: SystemState, rules: Sequence[RewriteRule], steps: int, seed: int
) -> list[tuple[str, SystemState]]:
    """Seeded uniform choice among all (rule, match) pairs at every step,
    stopping early at a normal form."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    rng = random.Random(seed)
    trace: list[tuple[str, SystemState]] = []
    current = state
    for _ in range(steps):
        options = successors(rules, current)
        if not options:
            break
        label, current = options[rng.randrange(len(options))]
        trace.append((label, current))
    return trace


@dataclass(frozen=True)
class SearchResult:
    path: tuple[str, ...] | None
    explored: int
    exhausted: bool


def search_reachable(
    state: SystemState,
    rules: Sequence[RewriteRule],
    predicate: Callable[[SystemState], bool],
    max_depth: int,
    max_states: int = 100_000,
) -> SearchResult:
    """Breadth-first search over canonical states; returns the
    lexicographically least among the shortest witness paths."""
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    if predicate(state):
        return SearchResult((), 1, False)
    visited = {state.key()}
    queue: deque[tuple[SystemState, tuple[str, ...]]] = deque([(state, ())])
    explored = 1
    while queue:
        current, path = queue.popleft()
        if len(path) >= max_depth:
            continue
        for label, nxt in successors(rules, current):
            k = nxt.key()
            if k in visited:
                continue
            visited.add(k)
            explored += 1
            if explored > max_states:
                raise BudgetExceeded(explored, len(queue))
            witness = path + (label,)
            if predicate(nxt):
                return SearchResult(witness, explored, False)
            queue.append((nxt, witness))
    return SearchResult(None, explored, True)


def signal_predicate(loc: str, symbol: str) -> Callable[[SystemState], bool]:
    """Predicate ``loc:symbol``: the compartment holds the bare signal."""

    def check(state: SystemState) -> bool:
        for name, entities in state.compartments:
            if name.lower() == loc.lower():
                return symbol in entities
        return False

    return check


# ---------------------------------------------------------------------------
# rule grammar


_RULE_HEADER = re.compile(r"rl\[(?P<label>[^\],]+)(?:\s*,\s*(?P<flag>authored))?\]\s*:")
_COMPARTMENT = re.compile(r"\{\s*(?P<loc>[A-Za-z][A-Za-z0-9_\-]*)\s*\|(?P<body>[^}]*)\}")


def _parse_cell(text: str) -> CellPattern:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise RuleSyntaxError("malformed cell literal: %r" % text)
    inner = text[1:-1]
    if "-" not in inner:
        raise RuleSyntaxError("cell literal needs '-': %r" % text)
    ctype, mods_text = inner.split("-", 1)
    ctype = ctype.strip()
    if not ctype or not ctype[0].isupper():
        raise RuleSyntaxError("cell type must be capitalized: %r" % text)
    mods: list[str] = []
    rest = None
    for tok in mods_text.split():
        if tok.startswith("$"):
            if rest is not None:
                raise RuleSyntaxError("cell %r has two rest variables" % text)
            rest = tok[1:]
        else:
            mods.append(tok)
    return CellPattern(ctype, tuple(sorted(mods)), rest)


def _parse_compartment_body(body: str) -> tuple[str | None, tuple[EntityPattern, ...]]:
    rest = None
    entities: list[EntityPattern] = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "$":
            j = i + 1
            while j < len(body) and (body[j].isalnum() or body[j] == "_"):
                j += 1
            if rest is not None:
                raise RuleSyntaxError("compartment has two rest variables: %r" % body)
            rest = body[i + 1:j]
            i = j
        elif ch == "[":
            j = body.index("]", i)
            entities.append(_parse_cell(body[i:j + 1]))
            i = j + 1
        elif ch == "(":
            j = body.index(")", i)
            pair_text = body[i + 1:j]
            if ":" not in pair_text:
                raise RuleSyntaxError("pair needs ':': %r" % pair_text)
            left_text, right_text = pair_text.split(":", 1)
            entities.append(PairPattern(_parse_cell(left_text), _parse_cell(right_text)))
            i = j + 1
        else:
            j = i
            while j < len(body) and not body[j].isspace():
                j += 1
            entities.append(body[i:j])
            i = j
    return rest, tuple(entities)


def _parse_side(text: str) -> tuple[CompartmentPattern, ...]:
    comps = []
    pos = 0
    while True:
        m = _COMPARTMENT.search(text, pos)
        if not m:
            break
        rest, entities = _parse_compartment_body(m.group("body"))
        comps.append(CompartmentPattern(m.group("loc"), rest, entities))
        pos = m.end()
    if not comps:
        raise RuleSyntaxError("rule side has no compartments: %r" % text.strip())
    names = [c.loc for c in comps]
    if len(names) != len(set(names)):
        raise RuleSyntaxError("rule side repeats a compartment: %r" % names)
    return tuple(comps)


def parse_rules(text: str) -> list[RewriteRule]:
    """Parse ``rl[label]: {LOC | ...} => {LOC | ...} .`` rule files.
    ``$name`` marks rest variables; ``, authored`` in the label brackets
    marks rules that bridge gaps the published set leaves open."""
    rules = []
    body = "\n".join(ln.split("#", 1)[0] for ln in text.splitlines())
    # the terminator is a dot followed by whitespace/end; dots inside
    # modifier names like xIL2Ra.lo sit between alphanumerics
    terminator = re.compile(r"\.(?=\s|$)")
    pos = 0
    while True:
        m = _RULE_HEADER.search(body, pos)
        if not m:
            leftover = body[pos:].strip()
            if leftover and leftover != ".":
                raise RuleSyntaxError("trailing input outside any rule: %r" % leftover[:40])
            break
        t = terminator.search(body, m.end())
        if t is None:
            raise RuleSyntaxError("rule %s is not terminated with '.'" % m.group("label"))
        end = t.start()
        chunk = body[m.end():end]
        if "=>" not in chunk:
            raise RuleSyntaxError("rule %s lacks '=>'" % m.group("label"))
        lhs_text, rhs_text = chunk.split("=>", 1)
        rules.append(
            RewriteRule(
                label=m.group("label").strip(),
                lhs=_parse_side(lhs_text),
                rhs=_parse_side(rhs_text),
                authored=bool(m.group("flag")),
            )
        )
        pos = end + 1
    labels = [r.label for r in rules]
    if len(labels) != len(set(labels)):
        raise RuleSyntaxError("duplicate rule labels")
    return rules


def parse_state(text: str) -> SystemState:
    """Parse a ground state literal, e.g. ``{PTS | Path [Mac - resting]} {Sig |}``."""
    comps: dict[str, list[Entity]] = {}
    pos = 0
    found = False
    while True:
        m = _COMPARTMENT.search(text, pos)
        if not m:
            break
        found = True
        rest, entities = _parse_compartment_body(m.group("body"))
        if rest is not None:
            raise RuleSyntaxError("state literals may not contain rest variables")
        ground: list[Entity] = []
        for e in entities:
            ground.append(_to_ground_entity(e))
        comps.setdefault(m.group("loc"), []).extend(ground)
        pos = m.end()
    if not found:
        raise RuleSyntaxError("no compartments in state literal: %r" % text.strip())
    return SystemState.make(comps)


def _to_ground_entity(pat: EntityPattern) -> Entity:
    if isinstance(pat, str):
        return pat
    if isinstance(pat, CellPattern):
        if pat.rest is not None:
            raise RuleSyntaxError("state literals may not contain rest variables")
        return CellObject.make(pat.ctype, pat.mods)
    return BoundPair(_to_ground_entity(pat.left), _to_ground_entity(pat.right))


# ---------------------------------------------------------------------------
# the immune-response rule base

IMMUNE_RULES_TEXT = """\
# Innate phase: a resting macrophage meets Lps-coated pathogens, engulfs,
# presents, and starts secreting Tnf.
rl[014.Mac.exposed.to.Path]:
  {PTS | $pts Path [Mac - $macmods resting]}
  =>
  {PTS | $pts Path [Mac - $macmods presenting sTnf xMhcI* xMhcII* xB7]} .

# A dendritic cell samples the pathogen and carries the word to a lymph
# node, arriving mature and presenting.
rl[015.DC.engulf.and.travel, authored]:
  {PTS | $pts Path [DC - $dcmods immature]}
  {LN | $ln}
  =>
  {PTS | $pts Path}
  {LN | $ln [DC - $dcmods mature xMhcII* xB7]} .

# In the lymph node a naive helper T cell docks onto the presenting DC.
rl[007.TC4.DC.bind, authored]:
  {LN | $ln [TC4 - $tc4mods naive] [DC - $dcmods mature]}
  =>
  {LN | $ln ([TC4 - $tc4mods naive] : [DC - $dcmods mature])} .

# Adaptive activation: the docked TC4 differentiates into a TH1 cell,
# up-regulating its IL2 receptor; the DC secretes IL12.
rl[008.TC4.becomes.TH1]:
  {LN | $ln ([TC4 - $tc4mods naive xIL2Ra.lo] : [DC - $dcmods mature xMhcII* xB7])}
  =>
  {LN | $ln ([TH1 - $tc4mods primed sIL2 sIfng xIL2Ra.hi xVLA4 xFas xFasL] : [DC - $dcmods mature xMhcII* xB7 sIL12])} .

# The freshly primed TH1 releases from the dendritic cell.
rl[009.unbind, authored]:
  {LN | $ln ([TH1 - $th1mods primed] : [DC - $dcmods])}
  =>
  {LN | $ln [TH1 - $th1mods primed] [DC - $dcmods]} .

# The TH1 matures into an effector.
rl[016.TH1.matures, authored]:
  {LN | $ln [TH1 - $th1mods primed]}
  =>
  {LN | $ln [TH1 - $th1mods effective]} .

# The effector travels to the infection site.
rl[017.TH1.travels.to.site, authored]:
  {LN | $ln [TH1 - $th1mods effective]}
  {PTS | $pts}
  =>
  {LN | $ln}
  {PTS | $pts [TH1 - $th1mods effective]} .

# At the site the TH1 docks onto the presenting macrophage.
rl[018pre.TH1.Mac.bind, authored]:
  {PTS | $pts [TH1 - $th1mods effective] [Mac - $macmods presenting]}
  =>
  {PTS | $pts ([TH1 - $th1mods effective] : [Mac - $macmods presenting])} .

# Mutual recognition via Cd40/Cd40L: the TH1 arms the macrophage.
rl[018.TH1.Mac.effects]:
  {PTS | $pts ([TH1 - $th1mods effective] : [Mac - $macmods presenting xMhcII*])}
  =>
  {PTS | $pts ([TH1 - $th1mods effective xCd40L sIfng] : [Mac - $macmods active xMhcII* xCd40 xTnfRs])} .

# The armed macrophage kills the engulfed pathogen and stands down; the
# TH1 stops secreting Ifng.
rl[019.Mac.act.by.TH1]:
  {PTS | $pts ([TH1 - $th1mods effective xCd40L sIfng] : [Mac - $macmods active sTnf xMhcI* xMhcII* xCd40 xTnfRs])}
  {Sig | $sig}
  =>
  {PTS | $pts [TH1 - $th1mods effective] [Mac - $macmods resting]}
  {Sig | $sig INTERNAL-PATH-DEAD} .
"""

IMMUNE_INITIAL_TEXT = "{PTS | Path [Mac - resting] [DC - immature]} {LN | [TC4 - naive xIL2Ra.lo]} {Sig |}"


def immune_ruleset() -> tuple[list[RewriteRule], SystemState]:
    """The published immune rules, the authored bridging steps, and the
    canonical initial state."""
    return parse_rules(IMMUNE_RULES_TEXT), parse_state(IMMUNE_INITIAL_TEXT)
