"""Outward-rounded interval arithmetic, boxes, and interval determinants.

Every arithmetic result here is a floating-point superset of the exact real
result.  Soundness is obtained by nudging each computed endpoint to the next
representable float in the outward direction (``math.nextafter``), which is
thread-safe, unlike switching the global FPU rounding mode.  Library
transcendentals (sin, cos, exp, log) are not correctly rounded, so their
endpoints are nudged by a few ulps instead of one.

Infinite endpoints are permitted only as overflow artifacts; NaN endpoints
are rejected at construction time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, Iterator, Optional, Sequence, Tuple

__all__ = [
    "Interval",
    "IntervalMatrix",
    "IntervalDomainError",
    "NBox",
    "Sign",
    "iv_add",
    "iv_sub",
    "iv_mul",
    "iv_div",
    "iv_neg",
    "iv_pow_int",
    "iv_sign",
    "iv_det",
    "leading_minor_table",
    "matched",
    "split_box",
]

_INF = math.inf

# ulp safety margins: basic ops after round-to-nearest are within 1/2 ulp of
# the exact value; libm transcendentals are only guaranteed to a few ulps.
_LIBM_ULPS = 3


class IntervalDomainError(ArithmeticError):
    """An interval operation left its mathematical domain (division by an
    interval containing zero, log of a non-positive interval, ...)."""


def _dn(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


def _dn_k(x: float, k: int) -> float:
    for _ in range(k):
        x = math.nextafter(x, -_INF)
    return x


def _up_k(x: float, k: int) -> float:
    for _ in range(k):
        x = math.nextafter(x, _INF)
    return x


def _safe_prod(a: float, b: float) -> float:
    # 0 * inf arises only when an overflowed bound meets an exact zero; the
    # true product of 0 with any finite magnitude is 0.
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


class Sign(IntEnum):
    """Strict sign of an interval (or of a set of evaluations)."""

    NEG = -1
    INDETERMINATE = 0
    POS = 1


@dataclass(frozen=True, slots=True)
class Interval:
    """Closed real interval [lo, hi] with outward-rounded arithmetic."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval endpoints must not be NaN")
        if self.lo > self.hi:
            raise ValueError(f"invalid interval: lo={self.lo!r} > hi={self.hi!r}")

    @classmethod
    def point(cls, value: float) -> "Interval":
        return cls(value, value)

    # -- geometry ---------------------------------------------------------

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        m = 0.5 * (self.lo + self.hi)
        if not math.isfinite(m):
            m = 0.5 * self.lo + 0.5 * self.hi
        return m

    @property
    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    def encloses(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return None
        return Interval(lo, hi)

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(_dn(self.lo + other.lo), _up(self.hi + other.hi))

    def __sub__(self, other: "Interval") -> "Interval":
        return Interval(_dn(self.lo - other.hi), _up(self.hi - other.lo))

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other: "Interval") -> "Interval":
        p1 = _safe_prod(self.lo, other.lo)
        p2 = _safe_prod(self.lo, other.hi)
        p3 = _safe_prod(self.hi, other.lo)
        p4 = _safe_prod(self.hi, other.hi)
        return Interval(_dn(min(p1, p2, p3, p4)), _up(max(p1, p2, p3, p4)))

    def __truediv__(self, other: "Interval") -> "Interval":
        if other.contains_zero():
            raise IntervalDomainError("division by an interval containing 0")
        qs = []
        for a in (self.lo, self.hi):
            for b in (other.lo, other.hi):
                if math.isinf(a) and math.isinf(b):
                    # overflowed bound over overflowed bound: no information
                    return Interval(-_INF, _INF)
                if math.isinf(b):
                    qs.append(0.0)
                else:
                    qs.append(a / b)
        return Interval(_dn(min(qs)), _up(max(qs)))

    def pow_int(self, k: int) -> "Interval":
        """Integer power with the even-power tightening ([-a,b]^2 >= 0)."""
        if k < 0:
            raise ValueError("exponent must be a non-negative integer")
        if k == 0:
            return Interval(1.0, 1.0)
        if k == 1:
            return self
        lo, hi = self.lo, self.hi
        if k % 2 == 1:
            return Interval(_dn_k(_pow(lo, k), _LIBM_ULPS), _up_k(_pow(hi, k), _LIBM_ULPS))
        if lo >= 0.0:
            return Interval(max(0.0, _dn_k(_pow(lo, k), _LIBM_ULPS)), _up_k(_pow(hi, k), _LIBM_ULPS))
        if hi <= 0.0:
            return Interval(max(0.0, _dn_k(_pow(-hi, k), _LIBM_ULPS)), _up_k(_pow(-lo, k), _LIBM_ULPS))
        m = max(-lo, hi)
        return Interval(0.0, _up_k(_pow(m, k), _LIBM_ULPS))

    # -- elementary functions ----------------------------------------------

    def exp(self) -> "Interval":
        return Interval(max(0.0, _dn_k(math.exp(self.lo), _LIBM_ULPS)),
                        _up_k(math.exp(self.hi), _LIBM_ULPS))

    def log(self) -> "Interval":
        if self.lo <= 0.0:
            raise IntervalDomainError("log of an interval touching (-inf, 0]")
        return Interval(_dn_k(math.log(self.lo), _LIBM_ULPS),
                        _up_k(math.log(self.hi), _LIBM_ULPS))

    def sqrt(self) -> "Interval":
        if self.lo < 0.0:
            raise IntervalDomainError("sqrt of an interval dipping below 0")
        return Interval(max(0.0, _dn(math.sqrt(self.lo))), _up(math.sqrt(self.hi)))

    def sin(self) -> "Interval":
        return _iv_trig(self.lo, self.hi, math.sin, 0.25, -0.25)

    def cos(self) -> "Interval":
        return _iv_trig(self.lo, self.hi, math.cos, 0.0, 0.5)

    def __repr__(self) -> str:
        return f"[{self.lo!r}, {self.hi!r}]"


def _pow(x: float, k: int) -> float:
    try:
        return math.pow(x, k)
    except OverflowError:
        return _INF if (x > 0 or k % 2 == 0) else -_INF


def _iv_trig(lo: float, hi: float, fn, max_phase: float, min_phase: float) -> Interval:
    """Range of sin/cos over [lo, hi].

    ``max_phase``/``min_phase`` are the extremum locations in units of the
    period (sin peaks at tau/4, cos at 0).  Extremum membership is tested with
    slack so that float error can only widen the result, never shrink it.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return Interval(-1.0, 1.0)
    if hi - lo >= math.tau:
        return Interval(-1.0, 1.0)
    vlo = fn(lo)
    vhi = fn(hi)
    rlo = _dn_k(min(vlo, vhi), _LIBM_ULPS)
    rhi = _up_k(max(vlo, vhi), _LIBM_ULPS)
    if _contains_phase(lo, hi, max_phase):
        rhi = 1.0
    if _contains_phase(lo, hi, min_phase):
        rlo = -1.0
    return Interval(max(rlo, -1.0), min(rhi, 1.0))


def _contains_phase(lo: float, hi: float, phase: float) -> bool:
    t1 = lo / math.tau - phase
    t2 = hi / math.tau - phase
    slack = 1e-12 * (abs(t1) + abs(t2) + 1.0)
    return math.floor(t2 + slack) >= math.ceil(t1 - slack)


# -- functional aliases -----------------------------------------------------

def iv_add(a: Interval, b: Interval) -> Interval:
    return a + b


def iv_sub(a: Interval, b: Interval) -> Interval:
    return a - b


def iv_mul(a: Interval, b: Interval) -> Interval:
    return a * b


def iv_div(a: Interval, b: Interval) -> Interval:
    return a / b


def iv_neg(a: Interval) -> Interval:
    return -a


def iv_pow_int(a: Interval, k: int) -> Interval:
    return a.pow_int(k)


def iv_sign(a: Interval) -> Sign:
    if a.lo > 0.0:
        return Sign.POS
    if a.hi < 0.0:
        return Sign.NEG
    return Sign.INDETERMINATE


def matched(u: Sequence[Interval], v: Sequence[Interval]) -> bool:
    """True iff no entry of ``u`` or ``v`` contains 0 and all entrywise
    products share one strict sign."""
    if len(u) != len(v):
        raise ValueError("matched: interval vectors must have equal length")
    common = 0
    for a, b in zip(u, v):
        sa, sb = iv_sign(a), iv_sign(b)
        if sa == Sign.INDETERMINATE or sb == Sign.INDETERMINATE:
            return False
        s = int(sa) * int(sb)
        if common == 0:
            common = s
        elif s != common:
            return False
    return True


# -- interval matrices ------------------------------------------------------

@dataclass(frozen=True)
class IntervalMatrix:
    """Rectangular grid of intervals (row-major)."""

    rows: Tuple[Tuple[Interval, ...], ...]

    def __post_init__(self) -> None:
        if not self.rows or not self.rows[0]:
            raise ValueError("interval matrix must be at least 1x1")
        width = len(self.rows[0])
        if any(len(r) != width for r in self.rows):
            raise ValueError("interval matrix rows must have equal length")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Interval]]) -> "IntervalMatrix":
        return cls(tuple(tuple(r) for r in rows))

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.rows[0])

    def entry(self, i: int, j: int) -> Interval:
        return self.rows[i][j]

    def row(self, i: int) -> Tuple[Interval, ...]:
        return self.rows[i]


def leading_minor_table(m: IntervalMatrix, max_order: Optional[int] = None) -> Dict[Tuple[int, ...], Interval]:
    """All k-order minors of the first k rows of ``m``, for k = 1..max_order.

    Keyed by the ascending tuple of chosen column indices; order-(k+1) minors
    are assembled from the order-k ones by Laplace expansion along their last
    row, so every minor is computed exactly once.
    """
    n = m.n_cols
    order = m.n_rows if max_order is None else max_order
    if order > m.n_rows:
        raise ValueError("minor order exceeds the number of rows")
    table: Dict[Tuple[int, ...], Tuple[float, float]] = {}
    for j in range(n):
        e = m.rows[0][j]
        table[(j,)] = (e.lo, e.hi)
    prev = list(table.keys())
    for k in range(2, order + 1):
        row = m.rows[k - 1]
        new_keys = []
        for cols in _combinations_sorted(n, k):
            acc_lo, acc_hi = 0.0, 0.0
            for t, j in enumerate(cols):
                sub = cols[:t] + cols[t + 1:]
                mlo, mhi = table[sub]
                e = row[j]
                p1 = _safe_prod(e.lo, mlo)
                p2 = _safe_prod(e.lo, mhi)
                p3 = _safe_prod(e.hi, mlo)
                p4 = _safe_prod(e.hi, mhi)
                plo = _dn(min(p1, p2, p3, p4))
                phi = _up(max(p1, p2, p3, p4))
                if ((k - 1) + t) % 2 == 1:
                    plo, phi = -phi, -plo
                acc_lo = _dn(acc_lo + plo)
                acc_hi = _up(acc_hi + phi)
            table[cols] = (acc_lo, acc_hi)
            new_keys.append(cols)
        prev = new_keys
    return {cols: Interval(lo, hi) for cols, (lo, hi) in table.items()}


def _combinations_sorted(n: int, k: int) -> Iterator[Tuple[int, ...]]:
    import itertools

    return itertools.combinations(range(n), k)


def iv_det(m: IntervalMatrix) -> Interval:
    """Interval enclosure of the determinant, by memoized minor expansion."""
    if m.n_rows != m.n_cols:
        raise ValueError("determinant requires a square matrix")
    table = leading_minor_table(m)
    return table[tuple(range(m.n_cols))]


# -- boxes ------------------------------------------------------------------

@dataclass(frozen=True)
class NBox:
    """Axis-aligned box in R^n, one interval per dimension."""

    dims: Tuple[Interval, ...]

    def __post_init__(self) -> None:
        if not self.dims:
            raise ValueError("a box needs at least one dimension")

    @classmethod
    def from_bounds(cls, bounds: Sequence[Sequence[float]]) -> "NBox":
        return cls(tuple(Interval(float(lo), float(hi)) for lo, hi in bounds))

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def width(self) -> float:
        return max(iv.width for iv in self.dims)

    @property
    def midpoint(self) -> Tuple[float, ...]:
        return tuple(iv.mid for iv in self.dims)

    def bounds(self) -> Tuple[Tuple[float, float], ...]:
        return tuple((iv.lo, iv.hi) for iv in self.dims)

    def vertices(self) -> Tuple[Tuple[float, ...], ...]:
        """All 2^n corner points, in binary-counter order."""
        pts: Tuple[Tuple[float, ...], ...] = ((),)
        for iv in self.dims:
            pts = tuple(p + (e,) for p in pts for e in ((iv.lo,) if iv.lo == iv.hi else (iv.lo, iv.hi)))
        return pts

    def face(self, i: int, side: str) -> Tuple["NBox", Tuple[int, float]]:
        """Drop dimension ``i``; returns the (n-1)-box and the fixed (i, value).

        ``side`` is "left" (value a_i) or "right" (value b_i).
        """
        if self.n == 1:
            raise ValueError("faces of a 1-D box are points, not boxes")
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        value = self.dims[i].lo if side == "left" else self.dims[i].hi
        rest = self.dims[:i] + self.dims[i + 1:]
        return NBox(rest), (i, value)

    def drop(self, i: int) -> "NBox":
        if self.n == 1:
            raise ValueError("cannot drop the only dimension")
        return NBox(self.dims[:i] + self.dims[i + 1:])

    def replace(self, i: int, iv: Interval) -> "NBox":
        return NBox(self.dims[:i] + (iv,) + self.dims[i + 1:])

    def contains_point(self, p: Sequence[float]) -> bool:
        return all(iv.contains(x) for iv, x in zip(self.dims, p))

    def encloses(self, other: "NBox") -> bool:
        return all(a.encloses(b) for a, b in zip(self.dims, other.dims))

    def intersect(self, other: "NBox") -> Optional["NBox"]:
        out = []
        for a, b in zip(self.dims, other.dims):
            iv = a.intersect(b)
            if iv is None:
                return None
            out.append(iv)
        return NBox(tuple(out))

    def interior_overlaps(self, other: "NBox") -> bool:
        return all(max(a.lo, b.lo) < min(a.hi, b.hi) for a, b in zip(self.dims, other.dims))

    def closure_overlaps(self, other: "NBox") -> bool:
        return all(max(a.lo, b.lo) <= min(a.hi, b.hi) for a, b in zip(self.dims, other.dims))

    def inflate(self, margin: float) -> "NBox":
        return NBox(tuple(Interval(iv.lo - margin, iv.hi + margin) for iv in self.dims))

    def split(self) -> Tuple["NBox", "NBox"]:
        """Bisect the widest dimension at its midpoint (ties: lowest index)."""
        widths = [iv.width for iv in self.dims]
        w = max(widths)
        if w <= 0.0:
            raise ValueError("cannot split a zero-width box")
        i = widths.index(w)
        iv = self.dims[i]
        m = iv.mid
        if not (iv.lo < m < iv.hi):
            raise ValueError("dimension too narrow to split at a distinct midpoint")
        return self.replace(i, Interval(iv.lo, m)), self.replace(i, Interval(m, iv.hi))

    def sort_key(self) -> Tuple[float, ...]:
        return tuple(iv.lo for iv in self.dims) + tuple(iv.hi for iv in self.dims)

    def __repr__(self) -> str:
        return "x".join(f"[{iv.lo:g},{iv.hi:g}]" for iv in self.dims)


def split_box(b: NBox) -> Tuple[NBox, NBox]:
    return b.split()
