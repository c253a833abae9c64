"""A small arithmetic language for writing D, P and T inside problem files.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | number | var | call | '(' expr ')'
    var    := ('x' | 'y') ('[' int ']')?
    call   := ident '(' expr (',' expr)* ')'

Evaluation is batched: ``x`` and ``y`` bind to arrays of shape ``(m, n)``
holding ``m`` points of dimension ``n``, and every intermediate value has shape
``(m, 1)`` (scalar) or ``(m, n)`` (vector).  Arithmetic and the elementwise
functions broadcast; ``norm1``/``norm2``/``norminf`` reduce a vector to a scalar.
"""

from __future__ import annotations

import math
import re
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArityError,
    DivisionNearZero,
    DomainError,
    ExprShapeError,
    ExprSyntaxError,
    ForbiddenVariable,
    IndexOutOfRange,
    UnknownIdentifier,
)

TAU_NUM = 1e-9
MAX_DEPTH = 64

CONTEXTS = ("D", "P", "T")

# name -> (min arity, max arity or None for variadic)
FUNCTIONS = {
    "abs": (1, 1),
    "min": (2, None),
    "max": (2, None),
    "sqrt": (1, 1),
    "exp": (1, 1),
    "pow": (2, 2),
    "norm1": (1, 1),
    "norm2": (1, 1),
    "norminf": (1, 1),
    "floorfn": (1, 1),
    "if_lt": (4, 4),
}
_REDUCTIONS = {"norm1", "norm2", "norminf"}


# -- AST ------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float
    offset: int = 0

    @property
    def depth(self):
        return 1

    @property
    def is_vector(self):
        return False


@dataclass(frozen=True)
class Var:
    name: str
    index: int | None = None
    vector: bool = False
    offset: int = 0

    @property
    def depth(self):
        return 1

    @property
    def is_vector(self):
        return self.vector


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    offset: int = 0

    @property
    def depth(self):
        return 1 + self.operand.depth

    @property
    def is_vector(self):
        return self.operand.is_vector


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    offset: int = 0

    @property
    def depth(self):
        return 1 + max(self.left.depth, self.right.depth)

    @property
    def is_vector(self):
        return self.left.is_vector or self.right.is_vector


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    offset: int = 0

    @property
    def depth(self):
        return 1 + max(a.depth for a in self.args)

    @property
    def is_vector(self):
        if self.name in _REDUCTIONS:
            return False
        return any(a.is_vector for a in self.args)


Expr = Num | Var | Neg | BinOp | Call


# -- tokenizer --------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[-+*/()\[\],])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _byte_offset(source, char_index):
    return len(source[:char_index].encode("utf-8"))


def tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExprSyntaxError(
                f"unexpected character {source[pos]!r}", _byte_offset(source, pos)
            )
        if m.lastgroup != "ws":
            # source is ASCII up to here (non-ASCII never matches), so char == byte
            tokens.append(_Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(source)))
    return tokens


# -- parser -------------------------------------------------------------------------

class _Parser:
    def __init__(self, source, context, dimension):
        self.tokens = tokenize(source)
        self.pos = 0
        self.context = context
        self.dimension = dimension
        self.nesting = 0

    @property
    def tok(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text):
        tok = self.tok
        if tok.text != text or tok.kind == "end":
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", tok.offset)
        return self.advance()

    def checked(self, node):
        if node.depth > MAX_DEPTH:
            raise ExprSyntaxError(
                f"expression nested deeper than {MAX_DEPTH} levels", node.offset
            )
        return node

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return node

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "punct":
            op = self.advance()
            node = self.checked(BinOp(op.text, node, self.term(), op.offset))
        return node

    def term(self):
        node = self.factor()
        while self.tok.text in ("*", "/") and self.tok.kind == "punct":
            op = self.advance()
            node = self.checked(BinOp(op.text, node, self.factor(), op.offset))
        return node

    def factor(self):
        tok = self.tok
        if tok.kind == "punct" and tok.text == "-":
            self.advance()
            with self.nested(tok):
                operand = self.factor()
            return self.checked(Neg(operand, tok.offset))
        if tok.kind == "num":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"numeric literal {tok.text} overflows", tok.offset)
            return Num(value, tok.offset)
        if tok.kind == "ident":
            return self.identifier()
        if tok.kind == "punct" and tok.text == "(":
            self.advance()
            with self.nested(tok):
                node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"expected an operand, found {found}", tok.offset)

    @contextmanager
    def nested(self, tok):
        # parentheses and calls cost parser stack even when the tree stays shallow
        self.nesting += 1
        if self.nesting > MAX_DEPTH:
            raise ExprSyntaxError(f"expression nested deeper than {MAX_DEPTH} levels", tok.offset)
        try:
            yield
        finally:
            self.nesting -= 1

    def identifier(self):
        tok = self.advance()
        name = tok.text
        if self.tok.kind == "punct" and self.tok.text == "(":
            if name not in FUNCTIONS:
                raise UnknownIdentifier(f"unknown function {name!r}", tok.offset)
            return self.call(tok)
        if name == "y" and self.context == "T":
            raise ForbiddenVariable("variable 'y' is not allowed in a map T", tok.offset)
        if name not in ("x", "y"):
            raise UnknownIdentifier(f"unknown identifier {name!r}", tok.offset)
        if self.tok.kind == "punct" and self.tok.text == "[":
            self.advance()
            idx = self.tok
            if idx.kind != "num" or not idx.text.isdigit():
                raise ExprSyntaxError("component index must be a non-negative integer", idx.offset)
            self.advance()
            self.expect("]")
            index = int(idx.text)
            if index >= self.dimension:
                raise IndexOutOfRange(
                    f"index {index} out of range for dimension {self.dimension}", idx.offset
                )
            return Var(name, index, False, tok.offset)
        return Var(name, None, self.dimension > 1, tok.offset)

    def call(self, name_tok):
        self.expect("(")
        with self.nested(name_tok):
            args = [self.expr()]
            while self.tok.kind == "punct" and self.tok.text == ",":
                self.advance()
                args.append(self.expr())
        self.expect(")")
        lo, hi = FUNCTIONS[name_tok.text]
        if len(args) < lo or (hi is not None and len(args) > hi):
            want = str(lo) if lo == hi else (f"at least {lo}" if hi is None else f"{lo}-{hi}")
            raise ArityError(
                f"{name_tok.text}() takes {want} argument(s), got {len(args)}", name_tok.offset
            )
        return self.checked(Call(name_tok.text, tuple(args), name_tok.offset))


def parse(source: str, context: str = "D", dimension: int = 1) -> Expr:
    """Parse ``source`` into an AST.

    ``context`` is one of ``"D"``, ``"P"`` (variables ``x`` and ``y``) or ``"T"``
    (``x`` only).  In context D or P the expression must be scalar-valued.
    """
    if context not in CONTEXTS:
        raise ValueError(f"context must be one of {CONTEXTS}, got {context!r}")
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    if not isinstance(source, str):
        raise ExprSyntaxError("expression source must be a string", 0)
    if not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    node = _Parser(source, context, dimension).parse()
    if context in ("D", "P") and node.is_vector:
        raise ExprShapeError(
            f"{context} must be scalar-valued; reduce vectors with norm1/norm2/norminf", 0
        )
    return node


# -- evaluation -------------------------------------------------------------------

def _scalar(v):
    return np.full((1, 1), v)


def _eval(node, x, y, mask):
    if isinstance(node, Num):
        return _scalar(node.value)
    if isinstance(node, Var):
        arr = x if node.name == "x" else y
        if arr is None:
            raise ValueError(f"variable {node.name!r} is unbound")
        if node.index is None:
            return arr
        return arr[:, node.index : node.index + 1]
    if isinstance(node, Neg):
        return -_eval(node.operand, x, y, mask)
    if isinstance(node, BinOp):
        a = _eval(node.left, x, y, mask)
        b = _eval(node.right, x, y, mask)
        with np.errstate(all="ignore"):
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            near = np.abs(b) <= TAU_NUM
            if np.any(near & mask):
                raise DivisionNearZero(
                    f"division by a value within {TAU_NUM:g} of zero (at byte {node.offset})"
                )
            return a / np.where(near, 1.0, b)
    return _eval_call(node, x, y, mask)


def _eval_call(node, x, y, mask):
    name = node.name
    if name == "if_lt":
        a = _eval(node.args[0], x, y, mask)
        b = _eval(node.args[1], x, y, mask)
        cond = a < b
        then = _eval(node.args[2], x, y, mask & cond)
        other = _eval(node.args[3], x, y, mask & ~cond)
        return np.where(cond, then, other)

    args = [_eval(a, x, y, mask) for a in node.args]
    with np.errstate(all="ignore"):
        if name == "abs":
            return np.abs(args[0])
        if name == "min":
            return np.minimum.reduce(np.broadcast_arrays(*args))
        if name == "max":
            return np.maximum.reduce(np.broadcast_arrays(*args))
        if name == "exp":
            return np.exp(args[0])
        if name == "floorfn":
            return np.floor(args[0])
        if name == "sqrt":
            v = args[0]
            if np.any((v < -TAU_NUM) & mask):
                raise DomainError(f"sqrt of a negative value (at byte {node.offset})")
            return np.sqrt(np.maximum(v, 0.0))
        if name == "pow":
            out = np.power(*np.broadcast_arrays(*args))
            if np.any(np.isnan(out) & ~np.isnan(args[0] + args[1]) & mask):
                raise DomainError(
                    f"pow of a negative base with a fractional exponent (at byte {node.offset})"
                )
            return out
        v = np.abs(args[0])
        if name == "norm1":
            return v.sum(axis=1, keepdims=True)
        if name == "norm2":
            return np.sqrt((v * v).sum(axis=1, keepdims=True))
        return v.max(axis=1, keepdims=True)


def _as_batch(v):
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    return arr


def evaluate(expr: Expr, x, y=None):
    """Evaluate ``expr`` at ``x`` (and ``y``).

    A single point (scalar or 1-D array) gives a float for scalar expressions
    and a 1-D array for vector ones.  A batch of shape ``(m, n)`` gives shape
    ``(m,)`` or ``(m, n)`` respectively.
    """
    single = np.ndim(x) <= 1
    xb = _as_batch(x)
    yb = None if y is None else _as_batch(y)
    m = xb.shape[0] if yb is None else max(xb.shape[0], yb.shape[0])
    mask = np.ones((m, 1), dtype=bool)
    out = _eval(expr, xb, yb, mask)
    if expr.is_vector:
        out = np.broadcast_to(out, (m, xb.shape[1])).astype(float, copy=True)
        return out[0] if single else out
    out = np.broadcast_to(out, (m, 1))[:, 0].astype(float, copy=True)
    return float(out[0]) if single else out


# -- printing -------------------------------------------------------------------

def _format_number(value):
    if value.is_integer() and abs(value) < 1e15:
        text = str(int(value))
    else:
        text = repr(value)
    return f"({text})" if value < 0 or text.startswith("-") else text


def unparse(expr: Expr) -> str:
    """Canonical, fully parenthesised source for ``expr``."""
    if isinstance(expr, Num):
        return _format_number(expr.value)
    if isinstance(expr, Var):
        return expr.name if expr.index is None else f"{expr.name}[{expr.index}]"
    if isinstance(expr, Neg):
        return f"(-{unparse(expr.operand)})"
    if isinstance(expr, BinOp):
        return f"({unparse(expr.left)} {expr.op} {unparse(expr.right)})"
    return f"{expr.name}({', '.join(unparse(a) for a in expr.args)})"


def variables(expr: Expr) -> set[str]:
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Num):
        return set()
    if isinstance(expr, Neg):
        return variables(expr.operand)
    if isinstance(expr, BinOp):
        return variables(expr.left) | variables(expr.right)
    return set().union(*(variables(a) for a in expr.args))
