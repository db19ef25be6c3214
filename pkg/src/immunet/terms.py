"""First-order terms without function symbols: the currency of node knowledge.

A term is a predicate applied to flat arguments.  Arguments are integers,
lowercase symbols, quoted strings, uppercase variables, or the anonymous
hole ``_``.  Holes stand for existential positions in goals ("any value
will do") and behave like ordinary constants everywhere except goal/head
unification, where they absorb whatever the clause supplies.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union


@dataclass(frozen=True)
class Var:
    """A named pattern variable (uppercase in the textual syntax)."""

    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Hole:
    """Anonymous existential position, written ``_``."""

    def __repr__(self) -> str:
        return "_"


HOLE = Hole()


@dataclass(frozen=True)
class Text:
    """A quoted string literal, kept distinct from bare symbols."""

    value: str

    def __repr__(self) -> str:
        return '"%s"' % self.value.replace('"', '\\"')


# Bare str arguments are symbols; everything else is wrapped.
Atom = Union[int, str, Text, Var, Hole]


@dataclass(frozen=True)
class Term:
    pred: str
    args: tuple[Atom, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    def __repr__(self) -> str:
        if not self.args:
            return self.pred
        return "%s(%s)" % (self.pred, ",".join(render_atom(a) for a in self.args))

    def variables(self) -> Iterator[Var]:
        for a in self.args:
            if isinstance(a, Var):
                yield a

    def is_ground(self) -> bool:
        """No named variables; holes are allowed."""
        return not any(isinstance(a, Var) for a in self.args)

    def is_strict_ground(self) -> bool:
        """No variables and no holes."""
        return not any(isinstance(a, (Var, Hole)) for a in self.args)


def render_atom(a: Atom) -> str:
    if isinstance(a, bool):
        raise TypeError("booleans are not term atoms")
    if isinstance(a, int):
        return str(a)
    return repr(a) if not isinstance(a, str) else a


def freeze(term: Term) -> Term:
    """Canonicalize a term for storage: every variable becomes a hole."""
    if term.is_ground():
        return term
    return Term(term.pred, tuple(HOLE if isinstance(a, Var) else a for a in term.args))


def subst(term: Term, binding: dict[Var, Atom], *, default: Atom | None = HOLE) -> Term:
    """Apply a binding; unbound variables become ``default`` (or stay if None)."""
    out: list[Atom] = []
    for a in term.args:
        if isinstance(a, Var):
            if a in binding:
                out.append(binding[a])
            elif default is None:
                out.append(a)
            else:
                out.append(default)
        else:
            out.append(a)
    return Term(term.pred, tuple(out))


def match(pattern: Term, ground: Term, binding: dict[Var, Atom] | None = None) -> dict[Var, Atom] | None:
    """One-way match of a variable pattern against a ground term.

    Holes in the ground term are treated as opaque constants, so a pattern
    variable can bind one but a pattern constant never matches one.
    """
    if pattern.pred != ground.pred or pattern.arity != ground.arity:
        return None
    env = dict(binding) if binding else {}
    for p, g in zip(pattern.args, ground.args):
        if isinstance(p, Var):
            if p in env and env[p] != g:
                return None
            env[p] = g
        elif p != g:
            return None
    return env


def unify_goal(goal: Term, head: Term) -> dict[Var, Atom] | None:
    """Unify a stored goal (constants + holes) with a clause head (variables).

    Holes are existential: they accept any head constant, and a head
    variable first bound to a hole is upgraded when a later position pins
    it to a real constant.
    """
    if goal.pred != head.pred or goal.arity != head.arity:
        return None
    env: dict[Var, Atom] = {}
    for g, h in zip(goal.args, head.args):
        if isinstance(h, Var):
            seen = env.get(h)
            if seen is None:
                env[h] = g
            elif seen == g or g == HOLE:
                continue
            elif seen == HOLE:
                env[h] = g
            else:
                return None
        elif isinstance(g, Hole):
            continue
        elif g != h:
            return None
    return env


def covers(goal: Term, fact: Term) -> bool:
    """True when a ground fact satisfies a goal positionwise (holes match anything)."""
    if goal.pred != fact.pred or goal.arity != fact.arity:
        return False
    return all(g == HOLE or g == f for g, f in zip(goal.args, fact.args))


class TermSyntaxError(ValueError):
    def __init__(self, message: str, pos: int = 0):
        super().__init__(message)
        self.pos = pos


_TOKEN = re.compile(
    r"""\s*(?:
        (?P<int>-?\d+)
      | (?P<string>"(?:[^"\\]|\\.)*")
      | (?P<ident>[A-Za-z][A-Za-z0-9_.\-]*)
      | (?P<hole>_)
      | (?P<punct>[(),])
    )""",
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise TermSyntaxError("unexpected character %r" % text[pos:].lstrip()[0], pos)
            break
        pos = m.end()
        for kind in ("int", "string", "ident", "hole", "punct"):
            tok = m.group(kind)
            if tok is not None:
                tokens.append((kind, tok, m.start()))
                break
    return tokens


def parse_term(text: str) -> Term:
    """Parse ``Pred(arg,...)``: ints bare, symbols lowercase, variables uppercase."""
    tokens = _tokenize(text)
    term, rest = _parse_term_tokens(tokens)
    if rest:
        raise TermSyntaxError("trailing input after term: %r" % rest[0][1], rest[0][2])
    return term


def _parse_term_tokens(tokens: list[tuple[str, str, int]]) -> tuple[Term, list]:
    if not tokens or tokens[0][0] != "ident" or not tokens[0][1][0].isupper():
        raise TermSyntaxError("expected a predicate name (uppercase identifier)")
    pred = tokens[0][1]
    rest = tokens[1:]
    if not rest or rest[0][1] != "(":
        return Term(pred), rest
    rest = rest[1:]
    args: list[Atom] = []
    if rest and rest[0][1] == ")":
        return Term(pred), rest[1:]
    while True:
        if not rest:
            raise TermSyntaxError("unterminated argument list for %s" % pred)
        kind, tok, pos = rest[0]
        if kind == "int":
            args.append(int(tok))
        elif kind == "string":
            args.append(Text(tok[1:-1].replace('\\"', '"')))
        elif kind == "hole":
            args.append(HOLE)
        elif kind == "ident":
            args.append(Var(tok) if tok[0].isupper() else tok)
        else:
            raise TermSyntaxError("unexpected %r in argument list" % tok, pos)
        rest = rest[1:]
        if not rest:
            raise TermSyntaxError("unterminated argument list for %s" % pred)
        if rest[0][1] == ")":
            return Term(pred, tuple(args)), rest[1:]
        if rest[0][1] != ",":
            raise TermSyntaxError("expected ',' or ')' after argument, got %r" % rest[0][1], rest[0][2])
        rest = rest[1:]


def atom_sort_key(a: Atom) -> tuple:
    """Total order over atoms: holes, then ints, then symbols/strings/vars by text."""
    if isinstance(a, Hole):
        return (0, "")
    if isinstance(a, int):
        return (1, "", a)
    return (2, render_atom(a))


def term_sort_key(t: Term) -> tuple:
    return (t.pred, t.arity, tuple(atom_sort_key(a) for a in t.args))
