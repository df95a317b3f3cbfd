"""Closed-form law expressions in a single variable.

Grammar (lowest to highest binding)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?            # right associative
    atom    := NUMBER | NAME | NAME '(' args ')' | '(' expr ')'

Evaluation is vectorised over numpy arrays and raises :class:`LawDomainError`
instead of silently producing ``nan``/``inf``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "LawSyntaxError",
    "LawDomainError",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "LawExpr",
    "parse_law",
    "eval_law",
    "to_text",
]

FUNCTIONS = {
    "tanh": 1,
    "exp": 1,
    "ln": 1,
    "sqrt": 1,
    "sin": 1,
    "cos": 1,
    "abs": 1,
    "pow": 2,
}
CONSTANTS = {"pi": math.pi}


class LawSyntaxError(ValueError):
    """Malformed law text; ``offset`` is the 0-based byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class LawDomainError(ArithmeticError):
    """Evaluation left the domain of an operator or overflowed."""


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Num, Var, Neg, BinOp, Call]


@dataclass(frozen=True)
class LawExpr:
    """A parsed law. Equality compares trees, not source text."""

    ast: Node
    var: str = "s"
    text: str = ""

    def __eq__(self, other):
        if not isinstance(other, LawExpr):
            return NotImplemented
        return self.ast == other.ast and self.var == other.var

    def __hash__(self):
        return hash((self.ast, self.var))

    def __call__(self, s):
        return eval_law(self, s)

    def __str__(self):
        return to_text(self)


# ---------------------------------------------------------------- tokenizer

_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    raw = text.encode("utf-8")
    # byte offsets are reported, so work on an ASCII-checked string
    if len(raw) != len(text):
        bad = next(i for i, ch in enumerate(text) if ord(ch) > 127)
        raise LawSyntaxError(f"unexpected character {text[bad]!r}", len(text[:bad].encode("utf-8")))
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise LawSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, var: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.var = var

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, tok, pos = self.peek()
        if tok != value or kind == "end":
            found = "end of input" if kind == "end" else repr(tok)
            raise LawSyntaxError(f"expected {value!r}, found {found}", pos)
        return self.advance()

    def parse(self):
        node = self.expr()
        kind, tok, pos = self.peek()
        if kind != "end":
            raise LawSyntaxError(f"unexpected {tok!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, tok, pos = self.advance()
        if kind == "num":
            return Num(float(tok))
        if kind == "name":
            if self.peek()[:2] == ("op", "("):
                if tok not in FUNCTIONS:
                    raise LawSyntaxError(f"unknown function {tok!r}", pos)
                self.advance()
                args = [self.expr()]
                while self.peek()[:2] == ("op", ","):
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[tok]:
                    raise LawSyntaxError(
                        f"{tok} takes {FUNCTIONS[tok]} argument(s), got {len(args)}", pos
                    )
                return Call(tok, tuple(args))
            if tok == self.var:
                return Var(tok)
            if tok in CONSTANTS:
                return Var(tok)
            if tok in FUNCTIONS:
                raise LawSyntaxError(f"function {tok!r} needs an argument list", pos)
            raise LawSyntaxError(f"unknown identifier {tok!r}", pos)
        if tok == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise LawSyntaxError("unexpected end of input", pos)
        raise LawSyntaxError(f"unexpected {tok!r}", pos)


def parse_law(text: str, var: str = "s") -> LawExpr:
    """Parse ``text`` as a law in the free variable ``var``."""
    if var in FUNCTIONS or var in CONSTANTS:
        raise ValueError(f"{var!r} is reserved")
    return LawExpr(_Parser(text, var).parse(), var, text)


# ---------------------------------------------------------------- evaluation


def _check(values, what):
    if not np.all(np.isfinite(values)):
        raise LawDomainError(f"overflow or invalid result in {what}")
    return values


def _eval(node, s):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name in CONSTANTS:
            return CONSTANTS[node.name]
        return s
    if isinstance(node, Neg):
        return -_eval(node.operand, s)
    if isinstance(node, BinOp):
        x = _eval(node.left, s)
        y = _eval(node.right, s)
        return _binop(node.op, x, y)
    if isinstance(node, Call):
        args = [_eval(arg, s) for arg in node.args]
        return _call(node.name, args)
    raise TypeError(f"not a law node: {node!r}")


def _binop(op, x, y):
    with np.errstate(all="ignore"):
        if op == "+":
            return _check(np.add(x, y), "+")
        if op == "-":
            return _check(np.subtract(x, y), "-")
        if op == "*":
            return _check(np.multiply(x, y), "*")
        if op == "/":
            if np.any(np.asarray(y) == 0):
                raise LawDomainError("division by zero")
            return _check(np.divide(x, y), "/")
        if op == "^":
            return _power(x, y)
    raise ValueError(op)


def _power(x, y):
    xa, ya = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    bad = (xa < 0) & (ya != np.round(ya))
    if np.any(bad):
        raise LawDomainError("negative base with non-integer exponent")
    if np.any((xa == 0) & (ya < 0)):
        raise LawDomainError("zero to a negative power")
    with np.errstate(all="ignore"):
        return _check(np.power(xa, ya), "^")


def _call(name, args):
    (x, *rest) = args
    with np.errstate(all="ignore"):
        if name == "ln":
            if np.any(np.asarray(x) <= 0):
                raise LawDomainError("ln of a nonpositive argument")
            return np.log(x)
        if name == "sqrt":
            if np.any(np.asarray(x) < 0):
                raise LawDomainError("sqrt of a negative argument")
            return np.sqrt(x)
        if name == "exp":
            return _check(np.exp(x), "exp")
        if name == "pow":
            return _power(x, rest[0])
        return {"tanh": np.tanh, "sin": np.sin, "cos": np.cos, "abs": np.abs}[name](x)


def eval_law(law: LawExpr, s):
    """Evaluate ``law`` at a scalar or array ``s``.

    Scalars give a ``float``; arrays give an array of the same shape (constant
    laws are broadcast).
    """
    scalar = np.ndim(s) == 0
    arg = float(s) if scalar else np.asarray(s, dtype=float)
    out = _eval(law.ast, arg)
    if scalar:
        out = float(out)
        if not math.isfinite(out):
            raise LawDomainError("non-finite result")
        return out
    return np.broadcast_to(np.asarray(out, dtype=float), arg.shape).copy()


# ---------------------------------------------------------------- printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_NEG_PREC = 3
_POW_PREC = 4


def _fmt_num(value: float) -> str:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError("literal is not finite")
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _show(node, ctx: int) -> str:
    # ctx: minimum precedence the surrounding position accepts without parens
    if isinstance(node, Num):
        text = _fmt_num(node.value)
        prec = _NEG_PREC if text.startswith("-") else 5
    elif isinstance(node, Var):
        text, prec = node.name, 5
    elif isinstance(node, Call):
        text, prec = f"{node.name}({', '.join(_show(a, 0) for a in node.args)})", 5
    elif isinstance(node, Neg):
        text, prec = "-" + _show(node.operand, _NEG_PREC), _NEG_PREC
    elif node.op == "^":
        text = f"{_show(node.left, _POW_PREC + 1)}^{_show(node.right, _NEG_PREC)}"
        prec = _POW_PREC
    else:
        p = _PREC[node.op]
        text = f"{_show(node.left, p)} {node.op} {_show(node.right, p + 1)}"
        prec = p
    return f"({text})" if prec < ctx else text


def to_text(law) -> str:
    """Render a law (or bare node) with the minimum parentheses needed."""
    node = law.ast if isinstance(law, LawExpr) else law
    return _show(node, 0)
