"""Flat evaluation tapes for expression systems, with numpy batch backends.

A tape is a common-subexpression-eliminated postorder program over slot
registers.  Two backends evaluate it over a whole batch of boxes (or points)
at once:

* interval backend: outward-rounded natural interval extension; domain
  violations (division through zero, log of a non-positive interval, sqrt
  below zero) poison the affected lanes with NaN instead of raising, so a
  batch never aborts and NaN lanes can never be mistaken for sign-definite
  results.
* point backend: plain float evaluation (used for midpoint Jacobians and
  Newton polishing, where soundness is not required).

Rounding mirrors :mod:`boxroots.intervals`: one ulp outward for +,-,*,/ and
a few ulps for libm functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import expressions as ex

__all__ = ["Tape", "compile_exprs", "eval_interval_batch", "eval_point_batch"]

_VAR, _CONST, _ADD, _SUB, _NEG, _MUL, _DIV, _POW, _SIN, _COS, _EXP, _LOG, _SQRT = range(13)

_NODE_OPS = {
    ex.Add: _ADD, ex.Sub: _SUB, ex.Neg: _NEG, ex.Mul: _MUL, ex.Div: _DIV,
    ex.Sin: _SIN, ex.Cos: _COS, ex.Exp: _EXP, ex.Log: _LOG, ex.Sqrt: _SQRT,
}

_INF = np.inf
_LIBM_ULPS = 3


@dataclass(frozen=True)
class Tape:
    instrs: Tuple[Tuple[int, int, int, float], ...]
    n_slots: int
    n_vars: int
    outputs: Tuple[int, ...]


def compile_exprs(exprs: Sequence[ex.Expr], n_vars: int) -> Tape:
    """Compile expressions into one shared tape (structural CSE across all)."""
    instrs: List[Tuple[int, int, int, float]] = []
    memo: Dict[tuple, int] = {}

    def emit(key: tuple, op: int, a: int, b: int, aux: float) -> int:
        slot = memo.get(key)
        if slot is None:
            slot = len(instrs)
            instrs.append((op, a, b, aux))
            memo[key] = slot
        return slot

    def walk(e: ex.Expr) -> int:
        if isinstance(e, ex.Const):
            return emit(("c", e.value), _CONST, -1, -1, e.value)
        if isinstance(e, ex.Var):
            if not 0 <= e.index < n_vars:
                raise ValueError(f"variable index {e.index} out of range 0..{n_vars - 1}")
            return emit(("v", e.index), _VAR, e.index, -1, 0.0)
        if isinstance(e, ex.IntPow):
            a = walk(e.base)
            return emit(("p", a, e.exponent), _POW, a, -1, float(e.exponent))
        op = _NODE_OPS[type(e)]
        if isinstance(e, (ex.Add, ex.Sub, ex.Mul, ex.Div)):
            a = walk(e.a)
            b = walk(e.b)
            return emit((op, a, b), op, a, b, 0.0)
        a = walk(e.a)
        return emit((op, a), op, a, -1, 0.0)

    outputs = tuple(walk(e) for e in exprs)
    return Tape(tuple(instrs), len(instrs), n_vars, outputs)


def _nxt_up(x: np.ndarray, k: int = 1) -> np.ndarray:
    for _ in range(k):
        x = np.nextafter(x, _INF)
    return x


def _nxt_dn(x: np.ndarray, k: int = 1) -> np.ndarray:
    for _ in range(k):
        x = np.nextafter(x, -_INF)
    return x


def eval_interval_batch(tape: Tape, lo: np.ndarray, hi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate all outputs over K boxes; lo/hi have shape (K, n_vars).

    Returns (out_lo, out_hi) of shape (K, n_outputs).  Lanes that hit a
    domain violation come back NaN.
    """
    K = lo.shape[0]
    slot_lo: List[np.ndarray] = [None] * tape.n_slots  # type: ignore[list-item]
    slot_hi: List[np.ndarray] = [None] * tape.n_slots  # type: ignore[list-item]
    with np.errstate(all="ignore"):
        for s, (op, a, b, aux) in enumerate(tape.instrs):
            if op == _VAR:
                slot_lo[s] = lo[:, a]
                slot_hi[s] = hi[:, a]
            elif op == _CONST:
                slot_lo[s] = np.full(K, aux)
                slot_hi[s] = slot_lo[s]
            elif op == _ADD:
                slot_lo[s] = _nxt_dn(slot_lo[a] + slot_lo[b])
                slot_hi[s] = _nxt_up(slot_hi[a] + slot_hi[b])
            elif op == _SUB:
                slot_lo[s] = _nxt_dn(slot_lo[a] - slot_hi[b])
                slot_hi[s] = _nxt_up(slot_hi[a] - slot_lo[b])
            elif op == _NEG:
                slot_lo[s] = -slot_hi[a]
                slot_hi[s] = -slot_lo[a]
            elif op == _MUL:
                alo, ahi, blo, bhi = slot_lo[a], slot_hi[a], slot_lo[b], slot_hi[b]
                p1, p2, p3, p4 = alo * blo, alo * bhi, ahi * blo, ahi * bhi
                rlo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
                rhi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
                slot_lo[s] = _nxt_dn(rlo)
                slot_hi[s] = _nxt_up(rhi)
            elif op == _DIV:
                alo, ahi, blo, bhi = slot_lo[a], slot_hi[a], slot_lo[b], slot_hi[b]
                bad = (blo <= 0.0) & (bhi >= 0.0)
                q1, q2, q3, q4 = alo / blo, alo / bhi, ahi / blo, ahi / bhi
                rlo = np.minimum(np.minimum(q1, q2), np.minimum(q3, q4))
                rhi = np.maximum(np.maximum(q1, q2), np.maximum(q3, q4))
                rlo = np.where(bad, np.nan, _nxt_dn(rlo))
                rhi = np.where(bad, np.nan, _nxt_up(rhi))
                slot_lo[s] = rlo
                slot_hi[s] = rhi
            elif op == _POW:
                k = int(aux)
                alo, ahi = slot_lo[a], slot_hi[a]
                if k == 0:
                    slot_lo[s] = np.ones(K)
                    slot_hi[s] = slot_lo[s]
                elif k == 1:
                    slot_lo[s] = alo
                    slot_hi[s] = ahi
                elif k % 2 == 1:
                    slot_lo[s] = _nxt_dn(_pow_arr(alo, k), _LIBM_ULPS)
                    slot_hi[s] = _nxt_up(_pow_arr(ahi, k), _LIBM_ULPS)
                else:
                    lo_mag = np.where(alo >= 0.0, alo, np.where(ahi <= 0.0, -ahi, 0.0))
                    hi_mag = np.maximum(np.abs(alo), np.abs(ahi))
                    rlo = np.maximum(0.0, _nxt_dn(_pow_arr(lo_mag, k), _LIBM_ULPS))
                    rhi = _nxt_up(_pow_arr(hi_mag, k), _LIBM_ULPS)
                    nan_in = np.isnan(alo) | np.isnan(ahi)
                    slot_lo[s] = np.where(nan_in, np.nan, rlo)
                    slot_hi[s] = np.where(nan_in, np.nan, rhi)
            elif op == _SIN:
                slot_lo[s], slot_hi[s] = _trig_arr(slot_lo[a], slot_hi[a], np.sin, 0.25, -0.25)
            elif op == _COS:
                slot_lo[s], slot_hi[s] = _trig_arr(slot_lo[a], slot_hi[a], np.cos, 0.0, 0.5)
            elif op == _EXP:
                slot_lo[s] = np.maximum(0.0, _nxt_dn(np.exp(slot_lo[a]), _LIBM_ULPS))
                nan_in = np.isnan(slot_lo[a])
                slot_lo[s] = np.where(nan_in, np.nan, slot_lo[s])
                slot_hi[s] = _nxt_up(np.exp(slot_hi[a]), _LIBM_ULPS)
            elif op == _LOG:
                alo, ahi = slot_lo[a], slot_hi[a]
                bad = ~(alo > 0.0)
                slot_lo[s] = np.where(bad, np.nan, _nxt_dn(np.log(alo), _LIBM_ULPS))
                slot_hi[s] = np.where(bad, np.nan, _nxt_up(np.log(ahi), _LIBM_ULPS))
            elif op == _SQRT:
                alo, ahi = slot_lo[a], slot_hi[a]
                bad = ~(alo >= 0.0)
                slot_lo[s] = np.where(bad, np.nan, np.maximum(0.0, _nxt_dn(np.sqrt(alo))))
                slot_hi[s] = np.where(bad, np.nan, _nxt_up(np.sqrt(ahi)))
            else:  # pragma: no cover
                raise AssertionError(f"bad opcode {op}")
    out_lo = np.stack([slot_lo[s] for s in tape.outputs], axis=1)
    out_hi = np.stack([slot_hi[s] for s in tape.outputs], axis=1)
    return out_lo, out_hi


def _pow_arr(x: np.ndarray, k: int) -> np.ndarray:
    return np.power(x, k)


def _trig_arr(lo, hi, fn, max_phase: float, min_phase: float):
    tau = 2.0 * np.pi
    vlo, vhi = fn(lo), fn(hi)
    rlo = _nxt_dn(np.minimum(vlo, vhi), _LIBM_ULPS)
    rhi = _nxt_up(np.maximum(vlo, vhi), _LIBM_ULPS)

    def contains(phase):
        t1 = lo / tau - phase
        t2 = hi / tau - phase
        slack = 1e-12 * (np.abs(t1) + np.abs(t2) + 1.0)
        return np.floor(t2 + slack) >= np.ceil(t1 - slack)

    whole = ~((hi - lo) < tau)  # catches inf widths and NaN as "whole range"
    has_max = contains(max_phase) | whole
    has_min = contains(min_phase) | whole
    rhi = np.where(has_max, 1.0, rhi)
    rlo = np.where(has_min, -1.0, rlo)
    nan_in = np.isnan(lo) | np.isnan(hi)
    rlo = np.where(nan_in, np.nan, np.maximum(rlo, -1.0))
    rhi = np.where(nan_in, np.nan, np.minimum(rhi, 1.0))
    return rlo, rhi


_U = 2.0 ** -52


def iv_mul_arrays(alo, ahi, blo, bhi):
    """Elementwise interval product of arrays, outward rounded."""
    p1, p2, p3, p4 = alo * blo, alo * bhi, ahi * blo, ahi * bhi
    lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
    hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
    return np.nextafter(lo, -_INF), np.nextafter(hi, _INF)


def mean_value_add(center_lo, center_hi, term_lo, term_hi):
    """center + sum(terms) over the last axis, with a float-summation bound."""
    n_terms = term_lo.shape[-1]
    slo = term_lo.sum(axis=-1)
    shi = term_hi.sum(axis=-1)
    mag = np.maximum(np.abs(term_lo), np.abs(term_hi)).sum(axis=-1)
    err = (n_terms + 2) * _U * (mag + np.maximum(np.abs(center_lo), np.abs(center_hi)))
    return (
        np.nextafter(center_lo + slo - err, -_INF),
        np.nextafter(center_hi + shi + err, _INF),
    )


def intersect_enclosures(alo, ahi, blo, bhi):
    """Meet of two enclosures of the same range (NaN lanes propagate)."""
    return np.maximum(alo, blo), np.minimum(ahi, bhi)


def eval_point_batch(tape: Tape, pts: np.ndarray) -> np.ndarray:
    """Plain float evaluation of all outputs at K points (shape (K, n_vars))."""
    K = pts.shape[0]
    slots: List[np.ndarray] = [None] * tape.n_slots  # type: ignore[list-item]
    with np.errstate(all="ignore"):
        for s, (op, a, b, aux) in enumerate(tape.instrs):
            if op == _VAR:
                slots[s] = pts[:, a]
            elif op == _CONST:
                slots[s] = np.full(K, aux)
            elif op == _ADD:
                slots[s] = slots[a] + slots[b]
            elif op == _SUB:
                slots[s] = slots[a] - slots[b]
            elif op == _NEG:
                slots[s] = -slots[a]
            elif op == _MUL:
                slots[s] = slots[a] * slots[b]
            elif op == _DIV:
                slots[s] = slots[a] / slots[b]
            elif op == _POW:
                slots[s] = np.power(slots[a], int(aux))
            elif op == _SIN:
                slots[s] = np.sin(slots[a])
            elif op == _COS:
                slots[s] = np.cos(slots[a])
            elif op == _EXP:
                slots[s] = np.exp(slots[a])
            elif op == _LOG:
                slots[s] = np.log(slots[a])
            elif op == _SQRT:
                slots[s] = np.sqrt(slots[a])
            else:  # pragma: no cover
                raise AssertionError(f"bad opcode {op}")
    return np.stack([slots[s] for s in tape.outputs], axis=1)
