"""Boolean-network abstraction of cytokine signaling.

Variables update synchronously from and/or/not expressions; each input
must occur with a single polarity per function, which makes the signed
influence graph well defined.  Attractors are enumerated exhaustively
(bounded at 24 variables) and signed feedback loops are read off the
influence graph.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import networkx as nx


class NetworkError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else "line %d: %s" % (line, message))
        self.line = line


class RefuseExhaustive(RuntimeError):
    """The network is too large for exhaustive state enumeration."""


# expression tree -----------------------------------------------------------


@dataclass(frozen=True)
class Ref:
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Not:
    child: "Expr"

    def __repr__(self) -> str:
        return "!%r" % (self.child,)


@dataclass(frozen=True)
class And:
    parts: tuple["Expr", ...]

    def __repr__(self) -> str:
        return "(%s)" % " & ".join(repr(p) for p in self.parts)


@dataclass(frozen=True)
class Or:
    parts: tuple["Expr", ...]

    def __repr__(self) -> str:
        return "(%s)" % " | ".join(repr(p) for p in self.parts)


Expr = Union[Ref, Not, And, Or]


def eval_expr(expr: Expr, env: dict[str, int]) -> int:
    if isinstance(expr, Ref):
        return env[expr.name]
    if isinstance(expr, Not):
        return 1 - eval_expr(expr.child, env)
    if isinstance(expr, And):
        return int(all(eval_expr(p, env) for p in expr.parts))
    if isinstance(expr, Or):
        return int(any(eval_expr(p, env) for p in expr.parts))
    raise TypeError(expr)


def _polarities(expr: Expr, sign: int, out: dict[str, set[int]]) -> None:
    if isinstance(expr, Ref):
        out.setdefault(expr.name, set()).add(sign)
    elif isinstance(expr, Not):
        _polarities(expr.child, -sign, out)
    else:
        for p in expr.parts:
            _polarities(p, sign, out)


# network -------------------------------------------------------------------


NetState = tuple[int, ...]


@dataclass
class BooleanNetwork:
    variables: tuple[str, ...]
    updates: dict[str, Expr]

    def __post_init__(self):
        declared = set(self.variables)
        for name, expr in self.updates.items():
            pol: dict[str, set[int]] = {}
            _polarities(expr, +1, pol)
            for ref, signs in pol.items():
                if ref not in declared:
                    raise NetworkError("update of %s references undeclared %s" % (name, ref))
                if len(signs) > 1:
                    raise NetworkError("input %s occurs with both polarities in the update of %s" % (ref, name))
        missing = declared - set(self.updates)
        if missing:
            raise NetworkError("variables lack update functions: %s" % sorted(missing))

    def index(self, name: str) -> int:
        return self.variables.index(name)

    def inputs(self) -> frozenset[str]:
        """Variables whose update is exactly themselves (held constants)."""
        return frozenset(v for v in self.variables if self.updates[v] == Ref(v))

    def influences(self) -> list[tuple[str, str, int]]:
        """Signed edges (source, target, sign) derived from the updates."""
        edges = []
        for target in self.variables:
            pol: dict[str, set[int]] = {}
            _polarities(self.updates[target], +1, pol)
            for source in sorted(pol):
                edges.append((source, target, next(iter(pol[source]))))
        return edges

    def influence_graph(self) -> "nx.DiGraph":
        g = nx.DiGraph()
        g.add_nodes_from(self.variables)
        for src, dst, sign in self.influences():
            g.add_edge(src, dst, sign=sign)
        return g


def update_sync(net: BooleanNetwork, state: NetState) -> NetState:
    """Synchronous step: every variable updated simultaneously."""
    if len(state) != len(net.variables):
        raise NetworkError("state length %d does not match %d variables" % (len(state), len(net.variables)))
    env = dict(zip(net.variables, state))
    return tuple(eval_expr(net.updates[v], env) for v in net.variables)


@dataclass(frozen=True)
class Attractor:
    kind: str  # 'fixed-point' | 'cycle'
    states: tuple[NetState, ...]
    basin: int

    @property
    def length(self) -> int:
        return len(self.states)


def attractors(net: BooleanNetwork, fixed: dict[str, int] | None = None, max_vars: int = 24) -> list[Attractor]:
    """Exhaustively enumerate attractors of the synchronous dynamics.

    ``fixed`` pins input variables (those with identity updates) and
    restricts the enumeration to that closed subspace; basin sizes then
    sum to 2^(free variables).
    """
    n = len(net.variables)
    fixed = fixed or {}
    for name in fixed:
        if name not in net.variables:
            raise NetworkError("cannot fix unknown variable %s" % name)
        if net.updates[name] != Ref(name):
            raise NetworkError("cannot fix %s: its update is not the identity" % name)
    free = [v for v in net.variables if v not in fixed]
    if len(free) > max_vars:
        raise RefuseExhaustive(
            "%d free variables exceed the exhaustive bound of %d" % (len(free), max_vars)
        )

    fixed_bits = {net.index(k): v for k, v in fixed.items()}
    free_idx = [net.index(v) for v in free]

    def decode(code: int) -> NetState:
        bits = [0] * n
        for pos, val in fixed_bits.items():
            bits[pos] = val
        for j, pos in enumerate(reversed(free_idx)):
            bits[pos] = (code >> j) & 1
        return tuple(bits)

    states = [decode(code) for code in range(1 << len(free))]
    succ = {s: update_sync(net, s) for s in states}

    attractor_of: dict[NetState, int] = {}
    cycles: list[tuple[NetState, ...]] = []
    for start in states:
        path: list[NetState] = []
        pos: dict[NetState, int] = {}
        cur = start
        while cur not in attractor_of and cur not in pos:
            pos[cur] = len(path)
            path.append(cur)
            cur = succ[cur]
        if cur in attractor_of:
            aid = attractor_of[cur]
        else:
            cycle = tuple(path[pos[cur]:])
            # rotate so the lexicographically least state leads
            pivot = min(range(len(cycle)), key=lambda i: cycle[i])
            cycle = cycle[pivot:] + cycle[:pivot]
            aid = len(cycles)
            cycles.append(cycle)
            for s in cycle:
                attractor_of[s] = aid
        for s in path:
            if s not in attractor_of:
                attractor_of[s] = aid

    basins = [0] * len(cycles)
    for s in states:
        basins[attractor_of[s]] += 1
    result = [
        Attractor("fixed-point" if len(c) == 1 else "cycle", c, basins[i])
        for i, c in enumerate(cycles)
    ]
    result.sort(key=lambda a: a.states[0])
    return result


def feedback_loops(net: BooleanNetwork, max_len: int = 6) -> list[tuple[tuple[str, ...], int]]:
    """All simple cycles of the influence graph up to ``max_len``, each with
    the product of its edge signs; canonical rotation, sorted output."""
    g = net.influence_graph()
    loops = []
    for cycle in nx.simple_cycles(g, length_bound=max_len):
        pivot = min(range(len(cycle)), key=lambda i: cycle[i])
        nodes = tuple(cycle[pivot:] + cycle[:pivot])
        sign = 1
        for i, src in enumerate(nodes):
            dst = nodes[(i + 1) % len(nodes)]
            sign *= g.edges[src, dst]["sign"]
        loops.append((nodes, sign))
    loops.sort(key=lambda t: (len(t[0]), t[0]))
    return loops


# parsing -------------------------------------------------------------------


_VAR_LINE = re.compile(r"^var\s+([A-Za-z][A-Za-z0-9_]*)\s*=\s*(.+);$")


class _ExprParser:
    def __init__(self, text: str, line: int):
        self.tokens = re.findall(r"[A-Za-z][A-Za-z0-9_]*|[()&|!]", text)
        if "".join(self.tokens).replace(" ", "") != re.sub(r"\s+", "", text):
            raise NetworkError("unexpected characters in expression %r" % text, line)
        self.line = line
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise NetworkError("unexpected end of expression", self.line)
        self.pos += 1
        return tok

    def parse(self) -> Expr:
        expr = self._or()
        if self.peek() is not None:
            raise NetworkError("trailing %r in expression" % self.peek(), self.line)
        return expr

    def _or(self) -> Expr:
        parts = [self._and()]
        while self.peek() == "|":
            self.take()
            parts.append(self._and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def _and(self) -> Expr:
        parts = [self._unary()]
        while self.peek() == "&":
            self.take()
            parts.append(self._unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def _unary(self) -> Expr:
        tok = self.take()
        if tok == "!":
            return Not(self._unary())
        if tok == "(":
            inner = self._or()
            if self.take() != ")":
                raise NetworkError("expected ')'", self.line)
            return inner
        if re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", tok):
            return Ref(tok)
        raise NetworkError("unexpected token %r" % tok, self.line)


def parse_network(text: str) -> BooleanNetwork:
    """Parse ``var Name = expr;`` lines into a network (declaration order
    fixes the state-vector layout)."""
    variables = []
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _VAR_LINE.match(line)
        if not m:
            raise NetworkError("expected 'var Name = expr;', got %r" % line, lineno)
        name = m.group(1)
        if name in updates:
            raise NetworkError("duplicate variable %s" % name, lineno)
        variables.append(name)
        updates[name] = _ExprParser(m.group(2), lineno).parse()
    if not variables:
        raise NetworkError("network file declares no variables")
    return BooleanNetwork(tuple(variables), updates)


# the built-in cytokine signaling network ------------------------------------

CYTOKINE_NETWORK_TEXT = """\
# Cytokine signaling between macrophages, NK cells, and helper T cells.
# Lps, Mph, and NK presence are held inputs (identity updates); the
# conjunction/disjunction shapes are authored, the signed influences are
# the published ones.
var Lps = Lps;
var Mph = Mph;
var NK = NK;
var Tnfa = Mph & Lps & Ifng;
var IL12 = Mph & Tnfa & !IL4;
var Ifng = (NK & Tnfa & IL12) | (Th1 & !IL10);
var Th1 = IL12 & !IL10;
var Th2 = IL4 | (Th2 & !Ifng);
var IL4 = Th2;
var IL10 = Th2;
var IL2 = (NK & Tnfa & IL12) | (Th1 & IL2);
"""


def cytokine_network() -> BooleanNetwork:
    return parse_network(CYTOKINE_NETWORK_TEXT)


def state_of(net: BooleanNetwork, assignment: dict[str, int]) -> NetState:
    """Build a full state vector from a variable assignment (default 0)."""
    unknown = set(assignment) - set(net.variables)
    if unknown:
        raise NetworkError("unknown variables in assignment: %s" % sorted(unknown))
    return tuple(int(assignment.get(v, 0)) for v in net.variables)
