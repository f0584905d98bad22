"""Parsed potential expressions with forward-mode differentiation.

Grammar (whitespace-insensitive, 1-based character positions in errors)::

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := ('+'|'-') unary | factor
    factor := base ('^' unary)?
    base   := number | 'q'index | '|q|' | func '(' expr ')' | '(' expr ')'

``^`` is right-associative and binds tighter than unary minus, so ``-q1^2``
is ``-(q1^2)`` and ``2^-1`` is ``0.5``.  Functions: exp, log, sin, cos,
sqrt, abs.

Evaluation is vectorized over a batch of points.  Gradients come from a
single forward pass with dual numbers whose derivative part is the full
(batch, dim) Jacobian row block, so one tree traversal yields all partial
derivatives.  At q = 0 the norm primitive ``|q|`` uses the subgradient 0,
matching the usual convention for abs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import BadIndexError, DomainError, ExpressionParseError

FUNCTIONS = ("abs", "cos", "exp", "log", "sin", "sqrt")


# ---------------------------------------------------------------------------
# syntax tree

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Norm:
    """The vector-norm primitive |q|."""


@dataclass(frozen=True)
class Neg:
    child: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


def to_source(node) -> str:
    """Fully parenthesized source that re-parses to an equivalent tree."""
    if isinstance(node, Const):
        return format(node.value, ".17g")
    if isinstance(node, Var):
        return f"q{node.index}"
    if isinstance(node, Norm):
        return "|q|"
    if isinstance(node, Neg):
        return f"(-{to_source(node.child)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z][A-Za-z0-9]*)"
    r"|(?P<op>[-+*/^()|]))"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "number" | "name" | the operator character | "end"
    text: str
    pos: int  # 1-based character offset


def tokenize(src: str) -> list[Token]:
    tokens = []
    i = 0
    while i < len(src):
        m = _TOKEN_RE.match(src, i)
        if m is None:
            stripped = src[i:].lstrip()
            if not stripped:
                break
            pos = len(src) - len(stripped) + 1
            raise ExpressionParseError(f"unexpected character {stripped[0]!r}", pos)
        kind = m.lastgroup
        text = m.group(kind)
        pos = m.start(kind) + 1
        tokens.append(Token(text if kind == "op" else kind, text, pos))
        i = m.end()
    tokens.append(Token("end", "", len(src) + 1))
    return tokens


# ---------------------------------------------------------------------------
# parser

_VAR_RE = re.compile(r"q(\d+)\Z")


class _Parser:
    def __init__(self, src: str, dim: int):
        self.tokens = tokenize(src)
        self.dim = dim
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.cur
        self.i += 1
        return tok

    def expect(self, kind: str, expected: set) -> Token:
        if self.cur.kind != kind:
            raise ExpressionParseError(
                f"unexpected {self.cur.text!r}" if self.cur.kind != "end" else "unexpected end of input",
                self.cur.pos,
                expected,
            )
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.cur.kind != "end":
            raise ExpressionParseError(
                f"unexpected {self.cur.text!r}", self.cur.pos, {"operator", "end of input"}
            )
        return node

    def expr(self):
        node = self.term()
        while self.cur.kind in ("+", "-"):
            op = self.advance().kind
            rhs = self.term()
            node = BinOp(op, node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.cur.kind in ("*", "/"):
            op = self.advance().kind
            rhs = self.unary()
            node = BinOp(op, node, rhs)
        return node

    def unary(self):
        if self.cur.kind == "-":
            self.advance()
            return Neg(self.unary())
        if self.cur.kind == "+":
            self.advance()
            return self.unary()
        return self.factor()

    def factor(self):
        node = self.base()
        if self.cur.kind == "^":
            self.advance()
            node = BinOp("^", node, self.unary())
        return node

    def base(self):
        tok = self.cur
        if tok.kind == "number":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "|":
            self.advance()
            name = self.expect("name", {"'q'"})
            if name.text != "q":
                raise ExpressionParseError(f"unexpected {name.text!r}", name.pos, {"'q'"})
            self.expect("|", {"'|'"})
            return Norm()
        if tok.kind == "name":
            self.advance()
            m = _VAR_RE.match(tok.text)
            if m:
                index = int(m.group(1))
                if index < 1 or index > self.dim:
                    raise BadIndexError(
                        f"variable q{index} out of range for dimension {self.dim}", tok.pos
                    )
                return Var(index)
            if tok.text in FUNCTIONS:
                self.expect("(", {"'('"})
                arg = self.expr()
                self.expect(")", {"')'"})
                return Call(tok.text, arg)
            raise ExpressionParseError(
                f"unknown name {tok.text!r}", tok.pos, {"function", "q<index>", "'|q|'"}
            )
        if tok.kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")", {"')'"})
            return node
        raise ExpressionParseError(
            f"unexpected {tok.text!r}" if tok.kind != "end" else "unexpected end of input",
            tok.pos,
            {"number", "q<index>", "'|q|'", "function", "'('"},
        )


def parse_expression(src: str, dim: int):
    """Parse potential source text into a syntax tree over q1..q<dim>."""
    if not src or not src.strip():
        raise ExpressionParseError("empty expression", 1, {"expression"})
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    return _Parser(src, dim).parse()


# ---------------------------------------------------------------------------
# evaluation: plain arrays or dual numbers

class Dual:
    """Value/Jacobian pair: ``val`` has shape (M,), ``der`` shape (M, n)."""

    __slots__ = ("val", "der")

    # Make numpy defer to the reflected operators instead of coercing.
    __array_ufunc__ = None

    def __init__(self, val, der):
        self.val = val
        self.der = der

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.der + other.der)
        return Dual(self.val + other, self.der)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.der - other.der)
        return Dual(self.val - other, self.der)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.der)

    def __neg__(self):
        return Dual(-self.val, -self.der)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.val * other.val,
                self.der * other.val[:, None] + other.der * self.val[:, None],
            )
        return Dual(self.val * other, self.der * np.asarray(other)[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            _nonzero(other.val, "division by zero")
            inv = 1.0 / other.val
            val = self.val * inv
            return Dual(val, (self.der - other.der * val[:, None]) * inv[:, None])
        other = np.asarray(other, dtype=float)
        _nonzero(other, "division by zero")
        return Dual(self.val / other, self.der / other[..., None])

    def __rtruediv__(self, other):
        _nonzero(self.val, "division by zero")
        val = other / self.val
        return Dual(val, -self.der * (val / self.val)[:, None])


def _value(x):
    return x.val if isinstance(x, Dual) else x


def _nonzero(arr, message):
    if np.any(np.asarray(arr) == 0.0):
        raise DomainError(message)


def _check(cond, message):
    if not np.all(cond):
        raise DomainError(message)


def _pow(base, expo):
    bval = _value(base)
    eval_ = _value(expo)
    if isinstance(expo, Dual):
        # Variable exponent: route through exp(e * log(b)), which needs b > 0.
        _check(np.asarray(bval) > 0.0, "power with variable exponent needs positive base")
        return _exp(expo * _log(base))
    e = np.asarray(eval_, dtype=float)
    b = np.asarray(bval, dtype=float)
    fractional = e != np.floor(e)
    _check(~((b < 0.0) & fractional), "negative base with non-integer exponent")
    _check(~((b == 0.0) & (e < 0.0)), "zero base with negative exponent")
    val = np.power(bval, eval_)
    if not isinstance(base, Dual):
        return val
    # Constant exponent: the power rule, valid for negative bases too.
    dcoef = eval_ * np.power(bval, eval_ - 1.0)
    _check(np.isfinite(dcoef), "power not differentiable here")
    return Dual(val, base.der * np.asarray(dcoef)[..., None])


def _exp(x):
    if isinstance(x, Dual):
        v = np.exp(x.val)
        return Dual(v, x.der * v[:, None])
    return np.exp(x)


def _log(x):
    v = _value(x)
    _check(np.asarray(v) > 0.0, "log of a non-positive value")
    if isinstance(x, Dual):
        return Dual(np.log(x.val), x.der / x.val[:, None])
    return np.log(x)


def _sin(x):
    if isinstance(x, Dual):
        return Dual(np.sin(x.val), x.der * np.cos(x.val)[:, None])
    return np.sin(x)


def _cos(x):
    if isinstance(x, Dual):
        return Dual(np.cos(x.val), -x.der * np.sin(x.val)[:, None])
    return np.cos(x)


def _sqrt(x):
    v = _value(x)
    _check(np.asarray(v) >= 0.0, "sqrt of a negative value")
    if isinstance(x, Dual):
        _check(np.asarray(x.val) > 0.0, "sqrt not differentiable at zero")
        r = np.sqrt(x.val)
        return Dual(r, x.der * (0.5 / r)[:, None])
    return np.sqrt(x)


def _abs(x):
    if isinstance(x, Dual):
        return Dual(np.abs(x.val), x.der * np.sign(x.val)[:, None])
    return np.abs(x)


_FUNCS = {"exp": _exp, "log": _log, "sin": _sin, "cos": _cos, "sqrt": _sqrt, "abs": _abs}


def _eval(node, points: np.ndarray, dual: bool):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        col = points[:, node.index - 1]
        if not dual:
            return col
        der = np.zeros_like(points)
        der[:, node.index - 1] = 1.0
        return Dual(col, der)
    if isinstance(node, Norm):
        r = np.linalg.norm(points, axis=1)
        if not dual:
            return r
        safe = np.where(r > 0.0, r, 1.0)
        der = points / safe[:, None]
        der[r == 0.0] = 0.0  # subgradient choice at the origin
        return Dual(r, der)
    if isinstance(node, Neg):
        child = _eval(node.child, points, dual)
        return -child if isinstance(child, Dual) else np.negative(child)
    if isinstance(node, BinOp):
        left = _eval(node.left, points, dual)
        right = _eval(node.right, points, dual)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            if not isinstance(left, Dual) and not isinstance(right, Dual):
                _nonzero(right, "division by zero")
            return left / right  # Dual operands check their own domain
        return _pow(left, right)
    if isinstance(node, Call):
        return _FUNCS[node.func](_eval(node.arg, points, dual))
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node, points: np.ndarray) -> np.ndarray:
    """Evaluate the tree at a (M, n) batch of points, returning shape (M,)."""
    out = _eval(node, points, dual=False)
    out = np.broadcast_to(np.asarray(out, dtype=float), points.shape[:1]).copy()
    if not np.all(np.isfinite(out)):
        raise DomainError("expression evaluated to a non-finite value")
    return out


def evaluate_gradient(node, points: np.ndarray) -> np.ndarray:
    """Forward-mode gradient at a (M, n) batch of points, returning (M, n)."""
    out = _eval(node, points, dual=True)
    if isinstance(out, Dual):
        grad = np.asarray(out.der, dtype=float)
    else:  # constant expression
        grad = np.zeros_like(points)
    if not np.all(np.isfinite(grad)):
        raise DomainError("gradient evaluated to a non-finite value")
    return grad
