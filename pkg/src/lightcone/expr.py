"""Recursive-descent parser for scalar field expressions.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' factor)?
    base   := number | var | func '(' expr ')' | '(' expr ')' | '-' base

``^`` is right associative. Unary minus binds tighter than ``^`` (it is
part of ``base``), so ``-x1^2`` means ``(-x1)^2``; write ``-(x1^2)`` for the
other reading. Functions: exp log sin cos sinh cosh sqrt. Variables:
``x1`` ... ``x9`` (ambient sphere coordinates) and ``u``, ``w`` (chart
parameters).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import jet

FUNCTIONS = tuple(jet.FUNCTIONS)
SPHERE_VARS = tuple(f"x{i}" for i in range(1, 10))
CHART_VARS = ("u", "w")

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()])|(?P<bad>\S))"
)


class ParseError(ValueError):
    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(expected))
        suffix = f"; expected one of {', '.join(self.expected)}" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{suffix}")


# AST nodes are plain tuples: ('num', v) ('var', name) ('neg', a)
# ('bin', op, a, b) ('call', fname, a)


@dataclass
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(text):
    toks = []
    pos = 0
    raw = text.encode("utf-8")
    while True:
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        kind = m.lastgroup
        start = m.start(kind)
        offset = len(text[:start].encode("utf-8"))
        if kind == "bad":
            raise ParseError(f"unexpected character {m.group(kind)!r}", offset)
        toks.append(_Tok(kind, m.group(kind), offset))
        pos = m.end()
    toks.append(_Tok("end", "", len(raw)))
    return toks


_BASE_START = {"number", "variable", "function", "(", "-"}


class _Parser:
    def __init__(self, text, allowed):
        self.toks = _tokenize(text)
        self.i = 0
        self.allowed = allowed

    @property
    def tok(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text):
        if self.tok.text != text or self.tok.kind != "op":
            raise ParseError(f"unexpected {self._describe(self.tok)}", self.tok.offset, {text})
        return self.take()

    @staticmethod
    def _describe(tok):
        return "end of input" if tok.kind == "end" else repr(tok.text)

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(
                f"unexpected {self._describe(self.tok)}", self.tok.offset, {"+", "-", "*", "/", "^", "end of input"}
            )
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.take().text
            node = ("bin", op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.take().text
            node = ("bin", op, node, self.factor())
        return node

    def factor(self):
        node = self.base()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.take()
            node = ("bin", "^", node, self.factor())
        return node

    def base(self):
        t = self.tok
        if t.kind == "num":
            self.take()
            return ("num", float(t.text))
        if t.kind == "name":
            self.take()
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return ("call", t.text, arg)
            if t.text in self.allowed:
                return ("var", t.text)
            raise ParseError(f"unknown name {t.text!r}", t.offset, _BASE_START)
        if t.kind == "op" and t.text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if t.kind == "op" and t.text == "-":
            self.take()
            return ("neg", self.base())
        raise ParseError(f"unexpected {self._describe(t)}", t.offset, _BASE_START)


def _variables(node, acc):
    kind = node[0]
    if kind == "var":
        acc.add(node[1])
    elif kind == "neg":
        _variables(node[1], acc)
    elif kind == "bin":
        _variables(node[2], acc)
        _variables(node[3], acc)
    elif kind == "call":
        _variables(node[2], acc)
    return acc


def evaluate(node, env):
    """Evaluate an AST with ``env`` mapping variable names to arrays or jets."""
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "var":
        return env[node[1]]
    if kind == "neg":
        return -evaluate(node[1], env)
    if kind == "call":
        return jet.FUNCTIONS[node[1]](evaluate(node[2], env))
    op, a, b = node[1], evaluate(node[2], env), evaluate(node[3], env)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a * jet.reciprocal(b)
    if isinstance(a, jet.Jet) or isinstance(b, jet.Jet):
        if isinstance(b, jet.Jet):
            return jet.exp(b * jet.log(a))
        return a**b
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(b != np.round(b)) and np.any(a < 0):
        raise jet.DomainError("non-integer power of a negative value")
    return a**b


@dataclass(frozen=True)
class FieldExpression:
    """A parsed expression over ``x1..x{n+1}`` (and chart parameters ``u``, ``w``)."""

    source: str
    ast: tuple
    n: int

    @property
    def variables(self):
        return frozenset(_variables(self.ast, set()))

    @property
    def is_chart_field(self):
        return bool(self.variables & set(CHART_VARS))

    def __call__(self, env):
        return evaluate(self.ast, env)


def parse_field(text, n=2):
    """Parse ``text`` into a :class:`FieldExpression` on S^n (or a 2D chart)."""
    allowed = set(SPHERE_VARS[: n + 1]) | set(CHART_VARS)
    return FieldExpression(text, _Parser(text, allowed).parse(), n)
