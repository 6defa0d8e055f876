"""Expression trees: parsing, symbolic differentiation, scalar evaluation.

Trees are immutable and shared.  Simplification is limited to constant
folding and zero/one elimination; user-written term structure is preserved
because interval tightness depends on it.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Tuple

from .intervals import Interval, IntervalDomainError, NBox

__all__ = [
    "Expr", "Const", "Var", "Add", "Sub", "Neg", "Mul", "Div", "IntPow",
    "Sin", "Cos", "Exp", "Log", "Sqrt",
    "EvaluationError", "ParseError",
    "add", "sub", "mul", "div", "neg", "pow_int",
    "differentiate", "eval_point", "eval_interval",
    "parse_expression", "to_infix", "substitute_vars",
]


class EvaluationError(ArithmeticError):
    """Point or interval evaluation left the function's domain."""


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class Expr:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Const(Expr):
    value: float


@dataclass(frozen=True, slots=True)
class Var(Expr):
    index: int


@dataclass(frozen=True, slots=True)
class Add(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True, slots=True)
class Sub(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True, slots=True)
class Neg(Expr):
    a: Expr


@dataclass(frozen=True, slots=True)
class Mul(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True, slots=True)
class Div(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True, slots=True)
class IntPow(Expr):
    base: Expr
    exponent: int

    def __post_init__(self) -> None:
        if self.exponent < 0:
            raise ValueError("IntPow exponent must be a non-negative integer")


@dataclass(frozen=True, slots=True)
class Sin(Expr):
    a: Expr


@dataclass(frozen=True, slots=True)
class Cos(Expr):
    a: Expr


@dataclass(frozen=True, slots=True)
class Exp(Expr):
    a: Expr


@dataclass(frozen=True, slots=True)
class Log(Expr):
    a: Expr


@dataclass(frozen=True, slots=True)
class Sqrt(Expr):
    a: Expr


_ZERO = Const(0.0)
_ONE = Const(1.0)


# -- folding constructors ----------------------------------------------------

def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if isinstance(a, Const) and a.value == 0.0:
        return b
    if isinstance(b, Const) and b.value == 0.0:
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if isinstance(b, Const) and b.value == 0.0:
        return a
    if isinstance(a, Const) and a.value == 0.0:
        return neg(b)
    return Sub(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.a
    if isinstance(a, Mul) and isinstance(a.a, Const):
        return Mul(Const(-a.a.value), a.b)
    return Neg(a)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if isinstance(b, Const):
        a, b = b, a
    if isinstance(a, Const):
        if a.value == 0.0:
            return _ZERO
        if a.value == 1.0:
            return b
        if a.value == -1.0:
            return neg(b)
        if isinstance(b, Mul) and isinstance(b.a, Const):
            return Mul(Const(a.value * b.a.value), b.b)
        if isinstance(b, Neg):
            return Mul(Const(-a.value), b.a)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const):
        if b.value == 1.0:
            return a
        if isinstance(a, Const) and b.value != 0.0:
            return Const(a.value / b.value)
        if isinstance(a, Const) and a.value == 0.0 and b.value != 0.0:
            return _ZERO
    return Div(a, b)


def pow_int(base: Expr, k: int) -> Expr:
    if k == 0:
        return _ONE
    if k == 1:
        return base
    if isinstance(base, Const):
        return Const(base.value ** k)
    return IntPow(base, k)


# -- differentiation ---------------------------------------------------------

@lru_cache(maxsize=None)
def differentiate(f: Expr, i: int) -> Expr:
    """Symbolic partial derivative of ``f`` w.r.t. variable index ``i``."""
    if isinstance(f, Const):
        return _ZERO
    if isinstance(f, Var):
        return _ONE if f.index == i else _ZERO
    if isinstance(f, Add):
        return add(differentiate(f.a, i), differentiate(f.b, i))
    if isinstance(f, Sub):
        return sub(differentiate(f.a, i), differentiate(f.b, i))
    if isinstance(f, Neg):
        return neg(differentiate(f.a, i))
    if isinstance(f, Mul):
        return add(mul(differentiate(f.a, i), f.b), mul(f.a, differentiate(f.b, i)))
    if isinstance(f, Div):
        da, db = differentiate(f.a, i), differentiate(f.b, i)
        return div(sub(mul(da, f.b), mul(f.a, db)), pow_int(f.b, 2))
    if isinstance(f, IntPow):
        d = differentiate(f.base, i)
        return mul(mul(Const(float(f.exponent)), pow_int(f.base, f.exponent - 1)), d)
    if isinstance(f, Sin):
        return mul(Cos(f.a), differentiate(f.a, i))
    if isinstance(f, Cos):
        return neg(mul(Sin(f.a), differentiate(f.a, i)))
    if isinstance(f, Exp):
        return mul(f, differentiate(f.a, i))
    if isinstance(f, Log):
        return div(differentiate(f.a, i), f.a)
    if isinstance(f, Sqrt):
        return div(differentiate(f.a, i), mul(Const(2.0), f))
    raise TypeError(f"unknown expression node: {f!r}")


# -- evaluation ---------------------------------------------------------------

def eval_point(f: Expr, p: Sequence[float]) -> float:
    """Plain floating-point evaluation at a point."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Var):
        return p[f.index]
    if isinstance(f, Add):
        return eval_point(f.a, p) + eval_point(f.b, p)
    if isinstance(f, Sub):
        return eval_point(f.a, p) - eval_point(f.b, p)
    if isinstance(f, Neg):
        return -eval_point(f.a, p)
    if isinstance(f, Mul):
        return eval_point(f.a, p) * eval_point(f.b, p)
    if isinstance(f, Div):
        d = eval_point(f.b, p)
        if d == 0.0:
            raise EvaluationError("division by zero")
        return eval_point(f.a, p) / d
    if isinstance(f, IntPow):
        return eval_point(f.base, p) ** f.exponent
    if isinstance(f, Sin):
        return math.sin(eval_point(f.a, p))
    if isinstance(f, Cos):
        return math.cos(eval_point(f.a, p))
    if isinstance(f, Exp):
        try:
            return math.exp(eval_point(f.a, p))
        except OverflowError:
            return math.inf
    if isinstance(f, Log):
        v = eval_point(f.a, p)
        if v <= 0.0:
            raise EvaluationError("log of a non-positive value")
        return math.log(v)
    if isinstance(f, Sqrt):
        v = eval_point(f.a, p)
        if v < 0.0:
            raise EvaluationError("sqrt of a negative value")
        return math.sqrt(v)
    raise TypeError(f"unknown expression node: {f!r}")


def eval_interval(f: Expr, box: NBox) -> Interval:
    """Natural interval extension over ``box`` (outward rounded)."""
    try:
        return _eval_iv(f, box.dims)
    except IntervalDomainError as exc:
        raise EvaluationError(str(exc)) from exc


def _eval_iv(f: Expr, dims: Tuple[Interval, ...]) -> Interval:
    if isinstance(f, Const):
        return Interval(f.value, f.value)
    if isinstance(f, Var):
        return dims[f.index]
    if isinstance(f, Add):
        return _eval_iv(f.a, dims) + _eval_iv(f.b, dims)
    if isinstance(f, Sub):
        return _eval_iv(f.a, dims) - _eval_iv(f.b, dims)
    if isinstance(f, Neg):
        return -_eval_iv(f.a, dims)
    if isinstance(f, Mul):
        return _eval_iv(f.a, dims) * _eval_iv(f.b, dims)
    if isinstance(f, Div):
        return _eval_iv(f.a, dims) / _eval_iv(f.b, dims)
    if isinstance(f, IntPow):
        return _eval_iv(f.base, dims).pow_int(f.exponent)
    if isinstance(f, Sin):
        return _eval_iv(f.a, dims).sin()
    if isinstance(f, Cos):
        return _eval_iv(f.a, dims).cos()
    if isinstance(f, Exp):
        return _eval_iv(f.a, dims).exp()
    if isinstance(f, Log):
        return _eval_iv(f.a, dims).log()
    if isinstance(f, Sqrt):
        return _eval_iv(f.a, dims).sqrt()
    raise TypeError(f"unknown expression node: {f!r}")


def substitute_vars(f: Expr, mapping: dict) -> Expr:
    """Replace Var(i) by mapping[i] (an Expr) wherever present."""
    if isinstance(f, Const):
        return f
    if isinstance(f, Var):
        return mapping.get(f.index, f)
    if isinstance(f, Add):
        return add(substitute_vars(f.a, mapping), substitute_vars(f.b, mapping))
    if isinstance(f, Sub):
        return sub(substitute_vars(f.a, mapping), substitute_vars(f.b, mapping))
    if isinstance(f, Neg):
        return neg(substitute_vars(f.a, mapping))
    if isinstance(f, Mul):
        return mul(substitute_vars(f.a, mapping), substitute_vars(f.b, mapping))
    if isinstance(f, Div):
        return div(substitute_vars(f.a, mapping), substitute_vars(f.b, mapping))
    if isinstance(f, IntPow):
        return pow_int(substitute_vars(f.base, mapping), f.exponent)
    if isinstance(f, Sin):
        return Sin(substitute_vars(f.a, mapping))
    if isinstance(f, Cos):
        return Cos(substitute_vars(f.a, mapping))
    if isinstance(f, Exp):
        return Exp(substitute_vars(f.a, mapping))
    if isinstance(f, Log):
        return Log(substitute_vars(f.a, mapping))
    if isinstance(f, Sqrt):
        return Sqrt(substitute_vars(f.a, mapping))
    raise TypeError(f"unknown expression node: {f!r}")


# -- parsing ------------------------------------------------------------------

# "p/q" rational literals fall out of the ordinary division rule plus
# constant folding, which gives the correctly rounded quotient; lexing them
# as one token would swallow the division in "x^2/2".
_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d+)?|\.\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)

_FUNCTIONS = {"sin": Sin, "cos": Cos, "exp": Exp, "log": Log, "sqrt": Sqrt}


class _Tokenizer:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0
        self.tokens = []
        self._scan()
        self.index = 0

    def _line_col(self, pos: int) -> Tuple[int, int]:
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return line, col

    def _scan(self) -> None:
        pos = 0
        while pos < len(self.text):
            m = _TOKEN_RE.match(self.text, pos)
            if m is None or m.end() == pos:
                stripped = self.text[pos:].lstrip()
                if not stripped:
                    break
                bad = len(self.text) - len(stripped)
                line, col = self._line_col(bad)
                raise ParseError(f"unexpected character {self.text[bad]!r}", line, col)
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.tokens.append(("end", "", len(self.text)))

    def peek(self) -> Tuple[str, str, int]:
        return self.tokens[self.index]

    def next(self) -> Tuple[str, str, int]:
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def error(self, message: str, pos: int) -> ParseError:
        line, col = self._line_col(pos)
        return ParseError(message, line, col)


def parse_expression(text: str, names: Sequence[str]) -> Expr:
    """Parse an infix expression over the given variable names.

    Grammar: expr := term (('+'|'-') term)*; term := factor (('*'|'/')
    factor)*; factor := base ('^' uint)?; base := number | ident |
    ident '(' expr ')' | '(' expr ')' | '-' base.  Numbers are decimals
    or p/q rationals.
    """
    tz = _Tokenizer(text)
    index = {name: i for i, name in enumerate(names)}
    e = _parse_expr(tz, index)
    kind, value, pos = tz.peek()
    if kind != "end":
        raise tz.error(f"unexpected trailing input {value!r}", pos)
    return e


def _parse_expr(tz: _Tokenizer, index: dict) -> Expr:
    e = _parse_term(tz, index)
    while True:
        kind, value, _ = tz.peek()
        if kind == "op" and value in "+-":
            tz.next()
            rhs = _parse_term(tz, index)
            e = add(e, rhs) if value == "+" else sub(e, rhs)
        else:
            return e


def _parse_term(tz: _Tokenizer, index: dict) -> Expr:
    e = _parse_factor(tz, index)
    while True:
        kind, value, _ = tz.peek()
        if kind == "op" and value in "*/":
            tz.next()
            rhs = _parse_factor(tz, index)
            e = mul(e, rhs) if value == "*" else div(e, rhs)
        else:
            return e


def _parse_factor(tz: _Tokenizer, index: dict) -> Expr:
    e = _parse_base(tz, index)
    kind, value, pos = tz.peek()
    if kind == "op" and value == "^":
        tz.next()
        kind, value, pos = tz.next()
        if kind != "number" or "." in value:
            raise tz.error("exponent must be an unsigned integer", pos)
        return pow_int(e, int(value))
    return e


def _parse_base(tz: _Tokenizer, index: dict) -> Expr:
    kind, value, pos = tz.next()
    if kind == "number":
        return Const(float(value))
    if kind == "ident":
        nkind, nvalue, _ = tz.peek()
        if nkind == "op" and nvalue == "(":
            fn = _FUNCTIONS.get(value)
            if fn is None:
                raise tz.error(f"unknown function {value!r}", pos)
            tz.next()
            arg = _parse_expr(tz, index)
            ckind, cvalue, cpos = tz.next()
            if not (ckind == "op" and cvalue == ")"):
                raise tz.error("expected ')'", cpos)
            return fn(arg)
        if value not in index:
            raise tz.error(f"unknown identifier {value!r}", pos)
        return Var(index[value])
    if kind == "op" and value == "(":
        e = _parse_expr(tz, index)
        ckind, cvalue, cpos = tz.next()
        if not (ckind == "op" and cvalue == ")"):
            raise tz.error("expected ')'", cpos)
        return e
    if kind == "op" and value == "-":
        return neg(_parse_base(tz, index))
    raise tz.error(f"unexpected token {value!r}" if value else "unexpected end of input", pos)


# -- serialization -------------------------------------------------------------

def to_infix(f: Expr, names: Sequence[str]) -> str:
    """Deterministic infix form, reparseable by :func:`parse_expression`."""
    return _fmt(f, names, 0)


def _fmt_const(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    s = repr(v)
    if "e" in s or "E" in s:
        from decimal import Decimal

        s = format(Decimal(s), "f")
    return s


# precedence levels: 0 add/sub, 1 mul/div, 2 unary minus, 3 power/atom
def _fmt(f: Expr, names: Sequence[str], parent: int) -> str:
    if isinstance(f, Const):
        s = _fmt_const(f.value)
        return f"({s})" if (f.value < 0 and parent > 0) else s
    if isinstance(f, Var):
        return names[f.index]
    if isinstance(f, Add):
        s = f"{_fmt(f.a, names, 0)} + {_fmt(f.b, names, 1)}"
        return f"({s})" if parent > 0 else s
    if isinstance(f, Sub):
        s = f"{_fmt(f.a, names, 0)} - {_fmt(f.b, names, 1)}"
        return f"({s})" if parent > 0 else s
    if isinstance(f, Neg):
        # the grammar binds '-' tighter than '^', so the operand always gets
        # its own parentheses when it is anything but an atom
        s = f"-{_fmt(f.a, names, 4)}"
        return f"({s})" if parent > 1 else s
    if isinstance(f, Mul):
        s = f"{_fmt(f.a, names, 1)}*{_fmt(f.b, names, 2)}"
        return f"({s})" if parent > 1 else s
    if isinstance(f, Div):
        s = f"{_fmt(f.a, names, 1)}/{_fmt(f.b, names, 2)}"
        return f"({s})" if parent > 1 else s
    if isinstance(f, IntPow):
        s = f"{_fmt(f.base, names, 4)}^{f.exponent}"
        return f"({s})" if parent > 3 else s
    for cls, name in ((Sin, "sin"), (Cos, "cos"), (Exp, "exp"), (Log, "log"), (Sqrt, "sqrt")):
        if isinstance(f, cls):
            return f"{name}({_fmt(f.a, names, 0)})"
    raise TypeError(f"unknown expression node: {f!r}")
