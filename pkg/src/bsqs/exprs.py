"""Tiny arithmetic expression grammar for closed-form sources and initial data.

Grammar (recursive descent, no eval):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ('+'|'-') factor | power
    power  := atom ('^' factor)?
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Names: variables x1, x2, x3, t; constant pi; functions sin, cos, exp.
Compiled expressions evaluate with numpy broadcasting.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .errors import ParseError

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_VARS = ("x1", "x2", "x3", "t")


def _tokenize(text, line=0):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise ParseError(line, f"bad token near {text[pos:pos+10]!r}")
            break
        num, name, op = m.groups()
        if num:
            out.append(("num", float(num)))
        elif name:
            out.append(("name", name))
        else:
            out.append(("op", "^" if op == "**" else op))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens, line):
        self.toks = tokens
        self.i = 0
        self.line = line

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, kind=None, value=None):
        k, v = self.peek()
        if kind is not None and k != kind or (value is not None and v != value):
            raise ParseError(self.line, f"expected {value or kind}, got {v!r}")
        self.i += 1
        return v

    def expr(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            op = self.take("op")
            rhs = self.term()
            node = (op, node, rhs)
        return node

    def term(self):
        node = self.factor()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            op = self.take("op")
            rhs = self.factor()
            node = (op, node, rhs)
        return node

    def factor(self):
        k, v = self.peek()
        if (k, v) in (("op", "+"), ("op", "-")):
            self.take("op")
            inner = self.factor()
            return inner if v == "+" else ("neg", inner)
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek() == ("op", "^"):
            self.take("op")
            return ("^", node, self.factor())
        return node

    def atom(self):
        k, v = self.peek()
        if k == "num":
            self.take()
            return ("num", v)
        if k == "name":
            self.take()
            if v == "pi":
                return ("num", math.pi)
            if v in _FUNCS:
                self.take("op", "(")
                arg = self.expr()
                self.take("op", ")")
                return ("call", v, arg)
            if v in _VARS:
                return ("var", v)
            raise ParseError(self.line, f"unknown name {v!r}")
        if (k, v) == ("op", "("):
            self.take()
            node = self.expr()
            self.take("op", ")")
            return node
        raise ParseError(self.line, f"unexpected {v!r}")


def _eval(node, env):
    op = node[0]
    if op == "num":
        return node[1]
    if op == "var":
        return env[node[1]]
    if op == "neg":
        return -_eval(node[1], env)
    if op == "call":
        return _FUNCS[node[1]](_eval(node[2], env))
    a, b = _eval(node[1], env), _eval(node[2], env)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    return a ** b


class Expression:
    """A compiled scalar expression over (x1, x2, x3, t)."""

    def __init__(self, text, line=0):
        self.text = text.strip()
        toks = _tokenize(text, line)
        if not toks:
            raise ParseError(line, "empty expression")
        p = _Parser(toks, line)
        self.ast = p.expr()
        if p.i != len(toks):
            raise ParseError(line, f"trailing input after expression: {toks[p.i:]}")

    def __call__(self, x1, x2, x3, t=0.0):
        val = _eval(self.ast, {"x1": x1, "x2": x2, "x3": x3, "t": t})
        return np.broadcast_to(val, np.broadcast_shapes(
            np.shape(x1), np.shape(x2), np.shape(x3))).astype(float) if np.isscalar(val) else val

    def __repr__(self):
        return f"Expression({self.text!r})"

    def __eq__(self, other):
        return isinstance(other, Expression) and self.text == other.text

    def __hash__(self):
        return hash(self.text)
