"""Polynomial utilities: term extraction, sleeve collapse, vanishing ranges.

Only the operations that genuinely need polynomial structure live here (the
sleeve-candidate filter and the 1/x coordinate transform); everything else
in the package treats functions as opaque expression trees.
"""

from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

from . import expressions as ex
from .intervals import Interval, NBox

__all__ = [
    "NonPolynomialError",
    "poly_terms",
    "terms_to_expr",
    "collapse_to_univariate",
    "vanish_intervals",
]

Monomial = Tuple[int, ...]


class NonPolynomialError(ValueError):
    """The expression is not a polynomial (transcendental node or a division
    by a non-constant)."""


def poly_terms(f: ex.Expr, n_vars: int) -> Dict[Monomial, float]:
    """Expand ``f`` into {exponent tuple: coefficient}.  Raises
    NonPolynomialError when the tree is not polynomial."""
    terms = _walk_terms(f, n_vars)
    return {m: c for m, c in terms.items() if c != 0.0}


def _walk_terms(f: ex.Expr, n: int) -> Dict[Monomial, float]:
    zero: Monomial = (0,) * n
    if isinstance(f, ex.Const):
        return {zero: f.value}
    if isinstance(f, ex.Var):
        m = tuple(1 if i == f.index else 0 for i in range(n))
        return {m: 1.0}
    if isinstance(f, ex.Add):
        return _add_terms(_walk_terms(f.a, n), _walk_terms(f.b, n), 1.0)
    if isinstance(f, ex.Sub):
        return _add_terms(_walk_terms(f.a, n), _walk_terms(f.b, n), -1.0)
    if isinstance(f, ex.Neg):
        return {m: -c for m, c in _walk_terms(f.a, n).items()}
    if isinstance(f, ex.Mul):
        return _mul_terms(_walk_terms(f.a, n), _walk_terms(f.b, n))
    if isinstance(f, ex.Div):
        if isinstance(f.b, ex.Const) and f.b.value != 0.0:
            return {m: c / f.b.value for m, c in _walk_terms(f.a, n).items()}
        raise NonPolynomialError("division by a non-constant")
    if isinstance(f, ex.IntPow):
        base = _walk_terms(f.base, n)
        out = {zero: 1.0}
        for _ in range(f.exponent):
            out = _mul_terms(out, base)
        return out
    raise NonPolynomialError(f"non-polynomial node {type(f).__name__}")


def _add_terms(a: Dict[Monomial, float], b: Dict[Monomial, float], sb: float) -> Dict[Monomial, float]:
    out = dict(a)
    for m, c in b.items():
        out[m] = out.get(m, 0.0) + sb * c
    return out


def _mul_terms(a: Dict[Monomial, float], b: Dict[Monomial, float]) -> Dict[Monomial, float]:
    out: Dict[Monomial, float] = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = tuple(x + y for x, y in zip(ma, mb))
            out[m] = out.get(m, 0.0) + ca * cb
    return out


def terms_to_expr(terms: Dict[Monomial, float]) -> ex.Expr:
    """Rebuild an expression as a deterministic sum of monomials."""
    if not terms:
        return ex.Const(0.0)
    parts = []
    for m in sorted(terms):
        c = terms[m]
        factor: ex.Expr = ex.Const(c)
        for i, e in enumerate(m):
            if e > 0:
                factor = ex.mul(factor, ex.pow_int(ex.Var(i), e))
        parts.append(factor)
    out = parts[0]
    for p in parts[1:]:
        out = ex.add(out, p)
    return out


# -- sleeve collapse ----------------------------------------------------------

class _IvPoly:
    """Univariate polynomial with interval coefficients (ascending)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: List[Interval]) -> None:
        self.coeffs = coeffs or [Interval.point(0.0)]

    @classmethod
    def const(cls, iv: Interval) -> "_IvPoly":
        return cls([iv])

    def add(self, other: "_IvPoly", sign: float = 1.0) -> "_IvPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        zero = Interval.point(0.0)
        out = []
        for k in range(n):
            a = self.coeffs[k] if k < len(self.coeffs) else zero
            b = other.coeffs[k] if k < len(other.coeffs) else zero
            out.append(a + b if sign > 0 else a - b)
        return _IvPoly(out)

    def neg(self) -> "_IvPoly":
        return _IvPoly([-c for c in self.coeffs])

    def mul(self, other: "_IvPoly") -> "_IvPoly":
        zero = Interval.point(0.0)
        out = [zero] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return _IvPoly(out)

    def pow(self, k: int) -> "_IvPoly":
        out = _IvPoly([Interval.point(1.0)])
        for _ in range(k):
            out = out.mul(self)
        return out

    def scale(self, iv: Interval) -> "_IvPoly":
        return _IvPoly([c * iv for c in self.coeffs])


def collapse_to_univariate(f: ex.Expr, cell: Sequence[Interval], n_vars: int) -> List[Interval]:
    """Interval coefficients of f(cell, x_n) as a polynomial in the last
    variable; ``cell`` provides intervals for variables 0..n-2."""
    return _collapse(f, tuple(cell), n_vars).coeffs


def _collapse(f: ex.Expr, cell: Tuple[Interval, ...], n: int) -> _IvPoly:
    if isinstance(f, ex.Const):
        return _IvPoly.const(Interval.point(f.value))
    if isinstance(f, ex.Var):
        if f.index == n - 1:
            return _IvPoly([Interval.point(0.0), Interval.point(1.0)])
        return _IvPoly.const(cell[f.index])
    if isinstance(f, ex.Add):
        return _collapse(f.a, cell, n).add(_collapse(f.b, cell, n))
    if isinstance(f, ex.Sub):
        return _collapse(f.a, cell, n).add(_collapse(f.b, cell, n), sign=-1.0)
    if isinstance(f, ex.Neg):
        return _collapse(f.a, cell, n).neg()
    if isinstance(f, ex.Mul):
        return _collapse(f.a, cell, n).mul(_collapse(f.b, cell, n))
    if isinstance(f, ex.Div):
        if isinstance(f.b, ex.Const) and f.b.value != 0.0:
            inv = Interval.point(1.0) / Interval.point(f.b.value)
            return _collapse(f.a, cell, n).scale(inv)
        raise NonPolynomialError("division by a non-constant")
    if isinstance(f, ex.IntPow):
        return _collapse(f.base, cell, n).pow(f.exponent)
    raise NonPolynomialError(f"non-polynomial node {type(f).__name__}")


def _horner(coeffs: Sequence[Interval], x: Interval) -> Interval:
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


def vanish_intervals(coeffs: Sequence[Interval], domain: Interval, min_width: float) -> List[Interval]:
    """Sub-intervals of ``domain`` where the interval polynomial can vanish.

    Sound: every real zero of every member polynomial lies in the union.
    Bisection stops at ``min_width``; adjacent survivors are merged.
    """
    out: List[Interval] = []
    stack = [domain]
    while stack:
        j = stack.pop()
        if not _horner(coeffs, j).contains_zero():
            continue
        if j.width <= min_width:
            out.append(j)
            continue
        m = j.mid
        stack.append(Interval(j.lo, m))
        stack.append(Interval(m, j.hi))
    if not out:
        return []
    out.sort(key=lambda iv: iv.lo)
    merged = [out[0]]
    for iv in out[1:]:
        if iv.lo <= merged[-1].hi:
            merged[-1] = Interval(merged[-1].lo, max(merged[-1].hi, iv.hi))
        else:
            merged.append(iv)
    return merged
