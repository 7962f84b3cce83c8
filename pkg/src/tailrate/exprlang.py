"""A small arithmetic expression language for scenario files and CLI flags.

Grammar (``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``)::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/") unary)*
    unary := "-" unary | power
    power := atom ("^" unary)?          # right-associative
    atom  := number | name | name "(" args ")" | "(" expr ")"

Evaluation works on floats or numpy arrays alike.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import EvalError, InputError, ParseError

__all__ = ["Expr", "parse", "evaluate", "to_source", "FUNCTIONS", "CONSTANTS"]


@dataclass(frozen=True)
class Num:
    value: float
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Const:
    name: str
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: object
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    offset: int = field(default=0, compare=False)


CONSTANTS = {"pi": math.pi, "e": math.e}

# name -> (min arity, max arity); None means unbounded
FUNCTIONS = {
    "exp": (1, 1),
    "ln": (1, 1),
    "log": (1, 1),
    "sqrt": (1, 1),
    "abs": (1, 1),
    "tanh": (1, 1),
    "sin": (1, 1),
    "cos": (1, 1),
    "min": (2, None),
    "max": (2, None),
    "pow": (2, 2),
}

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),−])"
    r")"
)


def _tokenize(source):
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            start = pos + len(source[pos:]) - len(source[pos:].lstrip())
            raise ParseError(f"unexpected character {source[start]!r}", _byte(source, start))
        kind = m.lastgroup
        text = m.group(kind)
        start = m.start(kind)
        if text == "−":
            text = "-"
        tokens.append((kind, text, _byte(source, start)))
        pos = m.end()
    tokens.append(("end", "", _byte(source, len(source))))
    return tokens


def _byte(source, char_index):
    return len(source[:char_index].encode("utf-8"))


class _Parser:
    def __init__(self, source, variables):
        self.tokens = _tokenize(source)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text, open_offset=None):
        kind, got, off = self.peek()
        if got != text or kind != "op":
            if text == ")":
                raise ParseError("unbalanced parentheses: missing ')'", open_offset if open_offset is not None else off)
            raise ParseError(f"expected {text!r}", off)
        return self.take()

    def parse(self):
        node = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            if text == ")":
                raise ParseError("unbalanced parentheses: unexpected ')'", off)
            raise ParseError(f"unexpected token {text!r}", off)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            _, op, off = self.take()
            node = BinOp(op, node, self.term(), off)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            _, op, off = self.take()
            node = BinOp(op, node, self.unary(), off)
        return node

    def unary(self):
        kind, text, off = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.unary(), off)
        return self.power()

    def power(self):
        base = self.atom()
        kind, text, off = self.peek()
        if kind == "op" and text == "^":
            self.take()
            return BinOp("^", base, self.unary(), off)
        return base

    def atom(self):
        kind, text, off = self.take()
        if kind == "num":
            return Num(float(text), off)
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                return self.call(text, off)
            if text in self.variables:
                return Var(text, off)
            if text in CONSTANTS:
                return Const(text, off)
            if text in FUNCTIONS:
                raise ParseError(f"function {text!r} used without arguments", off)
            raise ParseError(f"unknown variable {text!r}", off)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")", open_offset=off)
            return node
        if kind == "end":
            raise ParseError("unexpected end of input", off)
        if text == ")":
            raise ParseError("unbalanced parentheses: unexpected ')'", off)
        raise ParseError(f"unexpected token {text!r}", off)

    def call(self, name, off):
        if name not in FUNCTIONS:
            raise ParseError(f"unknown function {name!r}", off)
        _, _, open_off = self.take()
        args = []
        if not (self.peek()[0] == "op" and self.peek()[1] == ")"):
            args.append(self.expr())
            while self.peek()[0] == "op" and self.peek()[1] == ",":
                self.take()
                args.append(self.expr())
        self.expect(")", open_offset=open_off)
        lo, hi = FUNCTIONS[name]
        if len(args) < lo or (hi is not None and len(args) > hi):
            want = str(lo) if lo == hi else (f"at least {lo}" if hi is None else f"{lo}..{hi}")
            raise ParseError(f"arity mismatch: {name} takes {want} argument(s), got {len(args)}", off)
        return Call(name, tuple(args), off)


class Expr:
    """A parsed expression over a declared set of variables."""

    __slots__ = ("root", "variables", "source")

    def __init__(self, root, variables, source=""):
        self.root = root
        self.variables = tuple(variables)
        self.source = source

    def __call__(self, **bindings):
        return evaluate(self, bindings)

    def __eq__(self, other):
        return isinstance(other, Expr) and self.root == other.root

    def __hash__(self):
        return hash(self.root)

    def __repr__(self):
        return f"Expr({to_source(self)!r})"

    def __str__(self):
        return to_source(self)


def parse(source: str, declared_vars: Sequence[str] = ("x",)) -> Expr:
    variables = tuple(declared_vars)
    for v in variables:
        if v in FUNCTIONS or v in CONSTANTS:
            raise InputError(f"variable name {v!r} collides with a builtin")
    root = _Parser(source, set(variables)).parse()
    return Expr(root, variables, source)


# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _fmt_num(v):
    text = repr(float(v))
    return f"({text})" if v < 0 or text.startswith("-") else text


def _show(node, min_prec=0):
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({', '.join(_show(a) for a in node.args)})"
    if isinstance(node, Neg):
        text = "-" + _show(node.operand, _PREC["neg"])
        prec = _PREC["neg"]
    elif isinstance(node, BinOp):
        prec = _PREC[node.op]
        if node.op == "^":
            left = _show(node.left, 5)
            right = _show(node.right, _PREC["neg"])
        else:
            left = _show(node.left, prec)
            right = _show(node.right, prec + 1)
        sep = " " if prec == 1 else ""
        text = f"{left}{sep}{node.op}{sep}{right}"
    else:  # pragma: no cover
        raise TypeError(node)
    return f"({text})" if prec < min_prec else text


def to_source(e) -> str:
    return _show(e.root if isinstance(e, Expr) else e)


# evaluation

def _fail(msg, node):
    raise EvalError(msg, _show(node))


def _check(value, node):
    if not np.all(np.isfinite(value)):
        _fail("non-finite result", node)
    return value


def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, BinOp):
        a = _eval(node.left, env)
        b = _eval(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return _check(np.multiply(a, b), node)
        if node.op == "/":
            if np.any(np.asarray(b) == 0):
                _fail("division by zero", node)
            return _check(np.divide(a, b), node)
        return _check(np.power(a, b), node)
    if isinstance(node, Call):
        args = [_eval(a, env) for a in node.args]
        name = node.name
        if name in ("ln", "log"):
            if np.any(np.asarray(args[0]) <= 0):
                _fail(f"{name} of nonpositive argument", node)
            return np.log(args[0])
        if name == "sqrt":
            if np.any(np.asarray(args[0]) < 0):
                _fail("sqrt of negative argument", node)
            return np.sqrt(args[0])
        if name == "exp":
            return _check(np.exp(args[0]), node)
        if name == "abs":
            return np.abs(args[0])
        if name == "tanh":
            return np.tanh(args[0])
        if name == "sin":
            return np.sin(args[0])
        if name == "cos":
            return np.cos(args[0])
        if name == "pow":
            return _check(np.power(args[0], args[1]), node)
        if name == "min":
            out = args[0]
            for a in args[1:]:
                out = np.minimum(out, a)
            return out
        if name == "max":
            out = args[0]
            for a in args[1:]:
                out = np.maximum(out, a)
            return out
    raise TypeError(f"unknown node {node!r}")  # pragma: no cover


def evaluate(e: Expr, bindings: Mapping[str, object]):
    """Evaluate ``e``; returns a float for scalar bindings, else an ndarray."""
    env = {}
    for name in e.variables:
        if name not in bindings:
            raise EvalError(f"missing binding for {name!r}")
        env[name] = np.asarray(bindings[name], dtype=np.float64)
    scalar = all(v.ndim == 0 for v in env.values())
    with np.errstate(all="ignore"):
        value = _eval(e.root, env)
        value = np.asarray(value, dtype=np.float64)
        if not np.all(np.isfinite(value)):
            _fail("non-finite result", e.root)
    if scalar:
        return float(value)
    shape = np.broadcast_shapes(*(v.shape for v in env.values())) if env else value.shape
    return np.broadcast_to(value, shape).copy()
