"""Expression language for planar scalar fields u(x, y).

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = atom [ "^" integer ] ;
    atom    = number | "x" | "y" | func "(" expr ")" | "(" expr ")" ;
    func    = "sin" | "cos" | "exp" ;
    integer = digit { digit } ;
    number  = digit { digit } [ "." { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ]
            | "." digit { digit } [ ...exponent... ] ;

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``.  Exponents
are non-negative integer literals and are evaluated by repeated
multiplication.  Chained powers (``x^2^3``) must be parenthesised.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "Expr",
    "ExprError",
    "ParseError",
    "DomainError",
    "parse",
    "pretty",
    "Tape",
    "compile_tape",
]

FUNCTIONS = ("sin", "cos", "exp")


class ExprError(ValueError):
    """Base class for expression errors."""


class ParseError(ExprError):
    """Syntax error, unknown identifier or bad exponent.

    ``offset`` is the byte offset of the offending token in the UTF-8
    encoded input.
    """

    def __init__(self, message: str, offset: int, text: str = ""):
        self.message = message
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class DomainError(ExprError):
    """Evaluation left the expression's domain (division by zero, overflow)."""

    def __init__(self, message: str, point=None, subexpr: str | None = None):
        self.message = message
        self.point = point
        self.subexpr = subexpr
        where = f" in '{subexpr}'" if subexpr else ""
        at = f" at ({point[0]!r}, {point[1]!r})" if point is not None else ""
        super().__init__(f"{message}{where}{at}")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Pow, Call]


# --------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    boff = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", boff, text)
        chunk = m.group()
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, chunk, boff))
        pos = m.end()
        boff += len(chunk.encode("utf-8"))
    toks.append(_Tok("end", "", boff))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, message: str, tok: _Tok | None = None):
        tok = tok or self.tok
        raise ParseError(message, tok.offset, self.text)

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str):
        if not self.accept(text):
            found = self.tok.text or "end of input"
            self.fail(f"expected '{text}', found '{found}'")

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            self.fail("empty expression")
        e = self.expr()
        if self.tok.kind != "end":
            self.fail(f"unexpected '{self.tok.text}'")
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.accept("^"):
            tok = self.tok
            if tok.kind != "num":
                self.fail("exponent must be a non-negative integer literal")
            if not tok.text.isdigit():
                self.fail(f"non-integer exponent '{tok.text}'")
            self.i += 1
            if self.tok.kind == "op" and self.tok.text == "^":
                self.fail("chained '^' needs parentheses")
            return Pow(base, int(tok.text))
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.i += 1
            if tok.text in ("x", "y"):
                return Var(tok.text)
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg)
            self.fail(f"unknown identifier '{tok.text}'", tok)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        found = tok.text or "end of input"
        self.fail(f"unexpected '{found}'")


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree, raising :class:`ParseError`."""
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# pretty printer

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC_ADD if e.op in "+-" else _PREC_MUL
    if isinstance(e, Neg):
        return _PREC_NEG
    if isinstance(e, Pow):
        return _PREC_POW
    return _PREC_ATOM


def _wrap(e: Expr, need: int) -> str:
    s = pretty(e)
    return f"({s})" if _prec(e) < need else s


def pretty(e: Expr) -> str:
    """Render ``e`` with the minimal parentheses that re-parse to the same tree."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({pretty(e.arg)})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.operand, _PREC_NEG)
    if isinstance(e, Pow):
        return f"{_wrap(e.base, _PREC_ATOM)}^{e.exponent}"
    if isinstance(e, BinOp):
        p = _prec(e)
        # left-associative: a right operand of equal precedence keeps its parens
        return f"{_wrap(e.left, p)} {e.op} {_wrap(e.right, p + 1)}"
    raise TypeError(f"not an expression node: {e!r}")


# --------------------------------------------------------------------------
# tape compilation

OP_CONST, OP_X, OP_Y, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_NEG = range(8)
OP_SIN, OP_COS, OP_EXP, OP_POW = 8, 9, 10, 11

_FUNC_OPS = {"sin": OP_SIN, "cos": OP_COS, "exp": OP_EXP}
_BIN_OPS = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV}


@dataclass(frozen=True)
class Tape:
    """Postfix program for a stack machine; consumed by the evaluation kernels."""

    ops: np.ndarray  # int32
    args: np.ndarray  # int32: constant index or integer exponent
    consts: np.ndarray  # float64
    depth: int
    labels: tuple  # pretty-printed subexpression per instruction


def compile_tape(e: Expr) -> Tape:
    ops: list[int] = []
    args: list[int] = []
    consts: list[float] = []
    labels: list[str] = []
    depth = 0
    max_depth = 0

    def emit(op, arg, node, delta):
        nonlocal depth, max_depth
        ops.append(op)
        args.append(arg)
        labels.append(pretty(node))
        depth += delta
        max_depth = max(max_depth, depth)

    def walk(node):
        if isinstance(node, Num):
            consts.append(float(node.value))
            emit(OP_CONST, len(consts) - 1, node, 1)
        elif isinstance(node, Var):
            emit(OP_X if node.name == "x" else OP_Y, 0, node, 1)
        elif isinstance(node, Neg):
            walk(node.operand)
            emit(OP_NEG, 0, node, 0)
        elif isinstance(node, Call):
            walk(node.arg)
            emit(_FUNC_OPS[node.func], 0, node, 0)
        elif isinstance(node, Pow):
            walk(node.base)
            emit(OP_POW, node.exponent, node, 0)
        elif isinstance(node, BinOp):
            walk(node.left)
            walk(node.right)
            emit(_BIN_OPS[node.op], 0, node, -1)
        else:
            raise TypeError(f"not an expression node: {node!r}")

    walk(e)
    return Tape(
        ops=np.asarray(ops, dtype=np.int32),
        args=np.asarray(args, dtype=np.int32),
        consts=np.asarray(consts if consts else [0.0], dtype=np.float64),
        depth=max(max_depth, 1),
        labels=tuple(labels),
    )
