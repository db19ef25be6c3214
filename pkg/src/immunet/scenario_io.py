"""Scenario file parsing for the command-line front door.

A scenario is a sectioned text file selecting an engine and its inputs:

    engine ncps            # or: rewrite | boolnet
    [topology] / [nodes] / [policy] / [order] / [theory] / [schedule] / [run]
    [rules] / [state] / [search] / [run]          (rewrite engine)
    [network] / [inputs]                          (boolnet engine)

Errors carry file, line, and column so the CLI can point at the offence.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .knowledge import Kind, KnowledgeItem, ReplacementOrder, kb_insert, parse_replacement_rule
from .logic import Theory, TheoryError, parse_theory
from .netsim import ExchangePolicy, Node, ScheduleEvent, Topology, TopologyError, Variant, World
from .rewriting import RewriteRule, RuleSyntaxError, SystemState, parse_rules, parse_state
from .terms import TermSyntaxError, parse_term


class ScenarioError(ValueError):
    def __init__(self, path: str, line: int, message: str, column: int = 1):
        super().__init__("%s:%d:%d: %s" % (path, line, column, message))
        self.path = path
        self.line = line
        self.column = column


@dataclass
class NcpsScenario:
    world: World
    theory: Theory
    seed: int = 0
    horizon: int = 0


@dataclass
class RewriteScenario:
    rules: list[RewriteRule]
    state: SystemState
    seed: int = 0
    steps: int = 0
    find: str | None = None  # 'loc:symbol'
    depth: int = 20


@dataclass
class BoolnetScenario:
    network_path: str
    inputs: dict[str, int] = field(default_factory=dict)


Scenario = NcpsScenario | RewriteScenario | BoolnetScenario


@dataclass
class _Line:
    no: int
    text: str


def _sections(path: str, raw: str) -> tuple[str, dict[str, list[_Line]]]:
    engine = None
    sections: dict[str, list[_Line]] = {}
    current: list[_Line] | None = None
    for no, rawline in enumerate(raw.splitlines(), start=1):
        line = rawline.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if engine is None:
            parts = stripped.split()
            if parts[0] != "engine" or len(parts) != 2:
                raise ScenarioError(path, no, "scenario must open with 'engine ncps|rewrite|boolnet'")
            engine = parts[1]
            if engine not in ("ncps", "rewrite", "boolnet"):
                raise ScenarioError(path, no, "unknown engine %r" % engine)
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            name = stripped[1:-1].strip()
            current = sections.setdefault(name, [])
            continue
        if current is None:
            raise ScenarioError(path, no, "directive before any [section]: %r" % stripped)
        current.append(_Line(no, stripped))
    if engine is None:
        raise ScenarioError(path, 1, "empty scenario file")
    return engine, sections


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ScenarioError(path, 0, "cannot read scenario: %s" % exc.strerror)
    engine, sections = _sections(path, raw)
    if engine == "ncps":
        return _load_ncps(path, sections)
    if engine == "rewrite":
        return _load_rewrite(path, sections)
    return _load_boolnet(path, sections)


def _need(path: str, sections: dict, name: str) -> list[_Line]:
    if name not in sections:
        raise ScenarioError(path, 0, "missing required section [%s]" % name)
    return sections[name]


def _kv(path: str, lines: list[_Line]) -> dict[str, tuple[str, int]]:
    out = {}
    for ln in lines:
        parts = ln.text.split(None, 1)
        if len(parts) != 2:
            raise ScenarioError(path, ln.no, "expected 'key value': %r" % ln.text)
        out[parts[0]] = (parts[1].strip(), ln.no)
    return out


def _resolve(path: str, ref: str) -> str:
    return ref if os.path.isabs(ref) else os.path.join(os.path.dirname(os.path.abspath(path)), ref)


def _load_ncps(path: str, sections: dict[str, list[_Line]]) -> NcpsScenario:
    rooms: list[str] = []
    edges: list[tuple[str, str]] = []
    for ln in _need(path, sections, "topology"):
        parts = ln.text.split()
        if parts[0] == "rooms":
            rooms.extend(parts[1:])
        elif parts[0] == "adjacent" and len(parts) == 3:
            edges.append((parts[1], parts[2]))
        else:
            raise ScenarioError(path, ln.no, "expected 'rooms ...' or 'adjacent A B': %r" % ln.text)
    try:
        topology = Topology.build(rooms, edges)
    except TopologyError as exc:
        raise ScenarioError(path, sections["topology"][0].no, str(exc))

    policy = ExchangePolicy()
    if "policy" in sections:
        kv = _kv(path, sections["policy"])
        variant = Variant(kv["variant"][0]) if "variant" in kv else Variant.PUSH_ALL
        period = int(kv["period"][0]) if "period" in kv else 1
        try:
            policy = ExchangePolicy(variant, period)
        except ValueError as exc:
            raise ScenarioError(path, kv.get("period", ("", 0))[1], str(exc))

    order = ReplacementOrder.empty()
    if "order" in sections:
        rules = []
        for ln in sections["order"]:
            try:
                rules.append(parse_replacement_rule(ln.text))
            except (TermSyntaxError, ValueError) as exc:
                raise ScenarioError(path, ln.no, str(exc))
        order = ReplacementOrder(tuple(rules))

    theory_lines = _need(path, sections, "theory")
    kv = _kv(path, theory_lines)
    if "file" not in kv:
        raise ScenarioError(path, theory_lines[0].no, "[theory] needs 'file <path>'")
    theory_path = _resolve(path, kv["file"][0])
    try:
        with open(theory_path, "r", encoding="utf-8") as fh:
            theory = parse_theory(fh.read(), name=os.path.basename(theory_path))
    except OSError as exc:
        raise ScenarioError(path, kv["file"][1], "cannot read theory file %s: %s" % (theory_path, exc.strerror))
    except TheoryError as exc:
        raise ScenarioError(path, kv["file"][1], "in %s: %s" % (theory_path, exc))

    seed, horizon = 0, 0
    if "run" in sections:
        kv = _kv(path, sections["run"])
        seed = int(kv["seed"][0]) if "seed" in kv else 0
        horizon = int(kv["horizon"][0]) if "horizon" in kv else 0

    world = World(topology, order, policy, theory, seed=seed)
    for ln in _need(path, sections, "nodes"):
        parts = ln.text.split()
        if parts[0] != "node" or len(parts) < 4 or parts[2] != "room":
            raise ScenarioError(path, ln.no, "expected 'node ID room ROOM [caps a b]': %r" % ln.text)
        caps: frozenset[str] = frozenset()
        if len(parts) > 4:
            if parts[4] != "caps":
                raise ScenarioError(path, ln.no, "expected 'caps' after the room: %r" % ln.text)
            caps = frozenset(parts[5:])
        try:
            world.add_node(Node(parts[1], parts[3], caps))
        except TopologyError as exc:
            raise ScenarioError(path, ln.no, str(exc))

    for ln in sections.get("schedule", []):
        _schedule_line(path, world, ln)
    return NcpsScenario(world, theory, seed=seed, horizon=horizon)


def _schedule_line(path: str, world: World, ln: _Line) -> None:
    parts = ln.text.split(None, 3)
    if len(parts) < 4 or parts[0] != "at":
        raise ScenarioError(path, ln.no, "expected 'at TICK verb ...': %r" % ln.text)
    try:
        tick = int(parts[1])
    except ValueError:
        raise ScenarioError(path, ln.no, "tick must be an integer: %r" % parts[1])
    verb, rest = parts[2], parts[3]
    try:
        if verb == "inject":
            bits = rest.split(None, 2)
            if len(bits) < 3 or bits[1] not in ("fact", "goal"):
                raise ScenarioError(path, ln.no, "expected 'inject NODE fact|goal Term [ttl N]': %r" % rest)
            term_text, ttl = bits[2], None
            if " ttl " in term_text:
                term_text, ttl_text = term_text.rsplit(" ttl ", 1)
                ttl = int(ttl_text)
            item = KnowledgeItem(Kind(bits[1]), parse_term(term_text), created=tick, ttl=ttl, origin=bits[0])
            if tick == 0:
                node = world.nodes.get(bits[0])
                if node is None:
                    raise ScenarioError(path, ln.no, "inject targets unknown node %r" % bits[0])
                node.kb = kb_insert(node.kb, item, world.order, 0).kb
            else:
                world.add_event(ScheduleEvent(tick, "inject", bits[0], item=item))
        elif verb == "move":
            bits = rest.split()
            if len(bits) != 2:
                raise ScenarioError(path, ln.no, "expected 'move NODE ROOM': %r" % rest)
            world.add_event(ScheduleEvent(tick, "move", bits[0], room=bits[1]))
        elif verb == "join":
            bits = rest.split()
            if len(bits) < 3 or bits[1] != "room":
                raise ScenarioError(path, ln.no, "expected 'join NODE room ROOM [caps ...]': %r" % rest)
            caps = frozenset(bits[4:]) if len(bits) > 3 and bits[3] == "caps" else frozenset()
            world.add_event(ScheduleEvent(tick, "join", bits[0], room=bits[2], caps=caps))
        elif verb == "leave":
            world.add_event(ScheduleEvent(tick, "leave", rest.split()[0]))
        else:
            raise ScenarioError(path, ln.no, "unknown schedule verb %r" % verb)
    except (TermSyntaxError, TopologyError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(path, ln.no, str(exc))


def _load_rewrite(path: str, sections: dict[str, list[_Line]]) -> RewriteScenario:
    rules_lines = _need(path, sections, "rules")
    kv = _kv(path, rules_lines)
    if "file" not in kv:
        raise ScenarioError(path, rules_lines[0].no, "[rules] needs 'file <path>'")
    rules_path = _resolve(path, kv["file"][0])
    try:
        with open(rules_path, "r", encoding="utf-8") as fh:
            rules = parse_rules(fh.read())
    except OSError as exc:
        raise ScenarioError(path, kv["file"][1], "cannot read rules file %s: %s" % (rules_path, exc.strerror))
    except RuleSyntaxError as exc:
        raise ScenarioError(path, kv["file"][1], "in %s: %s" % (rules_path, exc))

    state_lines = _need(path, sections, "state")
    state_text = " ".join(ln.text for ln in state_lines)
    try:
        state = parse_state(state_text)
    except RuleSyntaxError as exc:
        raise ScenarioError(path, state_lines[0].no, str(exc))

    scenario = RewriteScenario(rules, state)
    if "search" in sections:
        kv = _kv(path, sections["search"])
        if "find" in kv:
            scenario.find = kv["find"][0]
            if ":" not in scenario.find:
                raise ScenarioError(path, kv["find"][1], "find wants 'loc:symbol', got %r" % scenario.find)
        if "depth" in kv:
            scenario.depth = int(kv["depth"][0])
    if "run" in sections:
        kv = _kv(path, sections["run"])
        scenario.seed = int(kv["seed"][0]) if "seed" in kv else 0
        scenario.steps = int(kv["steps"][0]) if "steps" in kv else 0
    return scenario


def _load_boolnet(path: str, sections: dict[str, list[_Line]]) -> BoolnetScenario:
    net_lines = _need(path, sections, "network")
    kv = _kv(path, net_lines)
    if "file" not in kv:
        raise ScenarioError(path, net_lines[0].no, "[network] needs 'file <path>'")
    scenario = BoolnetScenario(_resolve(path, kv["file"][0]))
    for ln in sections.get("inputs", []):
        parts = ln.text.split()
        if parts[0] != "set" or len(parts) != 2 or "=" not in parts[1]:
            raise ScenarioError(path, ln.no, "expected 'set Var=0|1': %r" % ln.text)
        name, value = parts[1].split("=", 1)
        if value not in ("0", "1"):
            raise ScenarioError(path, ln.no, "input bits are 0 or 1: %r" % ln.text)
        scenario.inputs[name] = int(value)
    return scenario
