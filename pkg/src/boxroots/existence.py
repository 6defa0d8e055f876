"""Recursive existence test for strong-monotone systems in a box.

For a verified S-M system G = (g_1..g_d) on a d-box, the curve cut out by
the leading d-1 functions meets the boundary at most twice, and G has a
unique zero iff the last function changes sign between the two crossing
points.  Each face is examined by restriction: the restricted leading system
is itself S-M (restriction only removes minor conditions), so the test
recurses down to monotone univariate sign changes.

Two shortcuts keep the recursion cheap and remain sound:

* a face is skipped when some leading function is interval-positive or
  interval-negative on it;
* vertex signs replace interval evaluation for a function whose Jacobian
  row is entrywise sign-definite on the original box (monotone vertex
  lemma); the row hypothesis is checked, never assumed.

Boundary-degenerate configurations (a crossing at a vertex or edge, a zero
endpoint value) yield Unknown rather than a verdict: an exact float zero
cannot be trusted under outward rounding, and a root on a shared face
re-emerges in the neighbouring box.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .expressions import EvaluationError
from .intervals import Interval, NBox, Sign, iv_sign
from .monotone import (
    PrecondSystem,
    SystemLike,
    is_sm_raw,
    rows_sign_definite,
    wrap_system,
)
from .systems import NotInvertibleError, invert_with_guard

__all__ = [
    "Outcome",
    "FaceIndex",
    "ExistenceResult",
    "vertex_sign",
    "existence",
    "refine_face_root",
]


class Outcome(Enum):
    UNIQUE = "unique"
    EMPTY = "empty"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class FaceIndex:
    """A face of a box: (original variable index, endpoint value)."""

    dim: int
    value: float


@dataclass(frozen=True)
class ExistenceResult:
    outcome: Outcome
    faces: Optional[Tuple[FaceIndex, FaceIndex]] = None

    def __eq__(self, other) -> bool:  # convenience: compare against Outcome
        if isinstance(other, Outcome):
            return self.outcome is other
        if isinstance(other, ExistenceResult):
            return self.outcome is other.outcome and self.faces == other.faces
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.outcome, self.faces))


_UNIQUE = ExistenceResult(Outcome.UNIQUE)
_EMPTY = ExistenceResult(Outcome.EMPTY)
_UNKNOWN = ExistenceResult(Outcome.UNKNOWN)


def vertex_sign(system: SystemLike, j: int, box: NBox) -> Sign:
    """Strict shared sign of function j over the vertices of ``box``.

    Vertices are evaluated as degenerate intervals, so rounding cannot turn
    a near-zero value into a strict sign.  Only meaningful as a sign of the
    whole box when the function's partials are sign-definite there; the
    existence driver checks that hypothesis from the Jacobian it already
    evaluated.
    """
    g = wrap_system(system)
    try:
        vlo, vhi = g.funcs_interval_at_vertices(box)
    except EvaluationError:
        return Sign.INDETERMINATE
    lo = vlo[:, j]
    hi = vhi[:, j]
    if np.isnan(lo).any() or np.isnan(hi).any():
        return Sign.INDETERMINATE
    if (lo > 0.0).all():
        return Sign.POS
    if (hi < 0.0).all():
        return Sign.NEG
    return Sign.INDETERMINATE


def _interval_sign(g: PrecondSystem, j: int, box: NBox) -> Sign:
    try:
        lo, hi = g.funcs_enclosure(box)
    except EvaluationError:
        return Sign.INDETERMINATE
    if np.isnan(lo[j]) or np.isnan(hi[j]):
        return Sign.INDETERMINATE
    if lo[j] > 0.0:
        return Sign.POS
    if hi[j] < 0.0:
        return Sign.NEG
    return Sign.INDETERMINATE


def existence(
    system: SystemLike,
    box: NBox,
    eps_b: float,
    rows_sd: Optional[Sequence[bool]] = None,
    debug: bool = False,
) -> ExistenceResult:
    """Decide whether an S-M-verified system has a unique zero in ``box``.

    ``eps_b`` bounds the face-root refinement effort.  ``rows_sd`` carries
    the per-row sign-definiteness of the Jacobian on the original box, as
    computed by the S-M check; it is sliced down the recursion.
    """
    g = wrap_system(system)
    d = g.dim
    if g.n_funcs != d:
        raise ValueError("existence requires a square system on the box")
    if rows_sd is None:
        try:
            jlo, jhi = g.jacobian_raw(box)
            rows_sd = rows_sign_definite(jlo, jhi)
        except EvaluationError:
            rows_sd = (False,) * d
    if debug:
        try:
            jlo, jhi = g.jacobian_raw(box)
            assert is_sm_raw(jlo, jhi), "restricted system lost the S-M property"
        except EvaluationError:
            pass

    if d == 1:
        return _base_case(g, box)

    leading_rows = rows_sd[: d - 1]
    num = 0
    hits: List[Tuple[int, float, NBox]] = []
    for pos in range(d):
        for value in (box.dims[pos].lo, box.dims[pos].hi):
            face_box = box.drop(pos)
            g_face = g.restrict_free(pos, value)
            leading = g_face.drop_last()
            if _face_skipped(leading, face_box, leading_rows):
                continue
            sub = existence(leading, face_box, eps_b, leading_rows, debug)
            if sub.outcome is Outcome.UNKNOWN:
                return _UNKNOWN
            if sub.outcome is Outcome.UNIQUE:
                hits.append((pos, value, face_box))
                num += 1
        if num >= 2:
            break
    assert num <= 2, "an S-M curve cannot cross the boundary more than twice"
    if num == 0:
        return _EMPTY
    if num == 1:
        # crossing at (or next to) a vertex: no verdict at this box size
        return _UNKNOWN

    signs = []
    for pos, value, face_box in hits:
        signs.append(_last_sign_refined(g, pos, value, face_box, eps_b, rows_sd, debug))
    s = int(signs[0]) * int(signs[1])
    if s < 0:
        faces = tuple(FaceIndex(g.free[pos], value) for pos, value, _ in hits)
        return ExistenceResult(Outcome.UNIQUE, (faces[0], faces[1]))
    if s > 0:
        return _EMPTY
    return _UNKNOWN


def _base_case(g: PrecondSystem, box: NBox) -> ExistenceResult:
    iv = box.dims[0]
    try:
        s_lo = iv_sign(g.func_interval(0, NBox((Interval.point(iv.lo),))))
        s_hi = iv_sign(g.func_interval(0, NBox((Interval.point(iv.hi),))))
    except EvaluationError:
        return _UNKNOWN
    prod = int(s_lo) * int(s_hi)
    if prod < 0:
        return _UNIQUE
    if prod > 0:
        return _EMPTY
    return _UNKNOWN


def _face_skipped(leading: PrecondSystem, face_box: NBox, rows_sd: Sequence[bool]) -> bool:
    """True when some leading function provably has no zero on the face."""
    try:
        glo, ghi = leading.funcs_enclosure(face_box)
    except EvaluationError:
        glo = ghi = None
    need_vertices = []
    if glo is not None:
        for j in range(leading.n_funcs):
            l, h = glo[j], ghi[j]
            if np.isnan(l) or np.isnan(h):
                continue
            if l > 0.0 or h < 0.0:
                return True
            if rows_sd[j]:
                need_vertices.append(j)
    else:
        need_vertices = [j for j in range(leading.n_funcs) if rows_sd[j]]
    if not need_vertices:
        return False
    try:
        vlo, vhi = leading.funcs_interval_at_vertices(face_box)
    except EvaluationError:
        return False
    for j in need_vertices:
        l = vlo[:, j]
        h = vhi[:, j]
        if np.isnan(l).any() or np.isnan(h).any():
            continue
        if (l > 0.0).all() or (h < 0.0).all():
            return True
    return False


def _last_sign_refined(
    g: PrecondSystem,
    pos: int,
    value: float,
    face_box: NBox,
    eps_b: float,
    rows_sd: Sequence[bool],
    debug: bool,
) -> Sign:
    """Sign of the last function at the face-root, refining the root box
    while it stays indeterminate and wider than eps_b."""
    d = g.dim
    g_face = g.restrict_free(pos, value)
    leading = g_face.drop_last()
    last = d - 1
    box = face_box
    while True:
        s = _interval_sign(g_face, last, box)
        if s is Sign.INDETERMINATE and rows_sd[last]:
            s = vertex_sign(g_face, last, box)
        if s is not Sign.INDETERMINATE:
            return s
        if box.width <= eps_b:
            return Sign.INDETERMINATE
        nxt = _refine_step(leading, box, eps_b, rows_sd[: d - 1], debug)
        if nxt is None:
            return Sign.INDETERMINATE
        box = nxt


def refine_face_root(
    system: SystemLike,
    face_box: NBox,
    eps_b: float,
    rows_sd: Optional[Sequence[bool]] = None,
    debug: bool = False,
) -> NBox:
    """Shrink a box with a verified unique zero down to width <= eps_b.

    Krawczyk contraction with bisection fallback; on a stall the smallest
    achieved box is returned (the caller decides what Unknown means).
    """
    g = wrap_system(system)
    if rows_sd is None:
        try:
            jlo, jhi = g.jacobian_raw(face_box)
            rows_sd = rows_sign_definite(jlo, jhi)
        except EvaluationError:
            rows_sd = (False,) * g.n_funcs
    box = face_box
    while box.width > eps_b:
        nxt = _refine_step(g, box, eps_b, rows_sd, debug)
        if nxt is None:
            break
        box = nxt
    return box


def _refine_step(
    g: PrecondSystem,
    box: NBox,
    eps_b: float,
    rows_sd: Sequence[bool],
    debug: bool,
) -> Optional[NBox]:
    """One refinement step around the unique zero: Krawczyk if it contracts,
    else bisection decided by the existence test on the halves."""
    k_box = _krawczyk_contract(g, box)
    if k_box is not None and k_box.width <= 0.9 * box.width:
        return k_box
    if box.width <= eps_b:
        return None
    try:
        low, high = box.split()
    except ValueError:
        return None
    r_low = existence(g, low, eps_b, rows_sd, debug)
    if r_low.outcome is Outcome.UNIQUE:
        return low
    if r_low.outcome is Outcome.EMPTY:
        return high
    r_high = existence(g, high, eps_b, rows_sd, debug)
    if r_high.outcome is Outcome.UNIQUE:
        return high
    if r_high.outcome is Outcome.EMPTY:
        return low
    return None


def _krawczyk_contract(g: PrecondSystem, box: NBox) -> Optional[NBox]:
    """K(X) = c - Y G(c) + (I - Y J(X))(X - c), intersected with X.

    Every zero of G in X lies in the intersection, so replacing X by it
    never loses the root.
    """
    d = g.dim
    c = box.midpoint
    try:
        Y = invert_with_guard(g.jacobian_point(c))
    except NotInvertibleError:
        return None
    if not np.all(np.isfinite(Y)):
        return None
    try:
        gc = g.funcs_interval_at_point(c)
        jac = g.jacobian_interval(box)
    except EvaluationError:
        return None
    diff = [box.dims[i] - Interval.point(c[i]) for i in range(d)]
    out = []
    for i in range(d):
        acc = Interval.point(c[i])
        for t in range(d):
            acc = acc - _scale(gc[t], Y[i, t])
        for jcol in range(d):
            coeff = Interval.point(1.0 if i == jcol else 0.0)
            for t in range(d):
                coeff = coeff - _scale(jac.entry(t, jcol), Y[i, t])
            acc = acc + coeff * diff[jcol]
        out.append(acc)
    k_box = NBox(tuple(out))
    return box.intersect(k_box)


def _scale(iv: Interval, a: float) -> Interval:
    return iv * Interval.point(a)
