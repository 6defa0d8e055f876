"""Opposite-monotone and strong-monotone tests, plus the preconditioner.

An O-M matrix has its last row matched with the vector of signed last-row
cofactor minors; an S-M matrix has every k-order minor drawn from its first
k rows sign-definite, for every k.  A system is O-M/S-M in a box when its
interval Jacobian over the box passes the respective matrix test.  The
preconditioner rewrites F as G = V * J_F(m(B))^-1 * F^T, which preserves
zeros exactly and drives J_G(B) toward the rotation V as the box shrinks
around a simple zero, so the S-M shape is eventually reached.

G is represented lazily: a real matrix applied to the base system's values
and Jacobian rows, never expanded into new expression trees.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import tape as tp
from .expressions import EvaluationError
from .intervals import (
    Interval,
    IntervalMatrix,
    NBox,
    Sign,
    iv_sign,
    matched,
)
from .systems import FuncSystem, NotInvertibleError, RestrictedSystem, invert_with_guard

__all__ = [
    "SMRotation",
    "PrecondSystem",
    "RotationSearchError",
    "is_om_matrix",
    "is_sm_matrix",
    "is_sm_system",
    "make_sm_rotation",
    "precondition",
    "wrap_system",
]

_U = 2.0 ** -52


class RotationSearchError(RuntimeError):
    """Random search for a strong-monotone rotation exhausted its retries."""


# -- matrix-level tests -------------------------------------------------------


def _raw_rows(m: IntervalMatrix) -> Tuple[Tuple[Tuple[float, float], ...], ...]:
    return tuple(tuple((e.lo, e.hi) for e in row) for row in m.rows)


def _scan_sm(rows: Sequence[Sequence[Tuple[float, float]]]) -> bool:
    """All k-order minors of the first k rows exclude zero, k = 1..n.

    Minors are grown one order at a time (Laplace expansion along the block's
    last row), reusing the previous order's table.
    """
    import math

    n = len(rows[0])
    if len(rows) != n:
        return False
    for row in rows:
        for lo, hi in row:
            if not (math.isfinite(lo) and math.isfinite(hi)):
                return False
    table = {}
    for j, (lo, hi) in enumerate(rows[0]):
        if lo <= 0.0 <= hi:
            return False
        table[(j,)] = (lo, hi)
    nxt = math.nextafter
    inf = math.inf
    for k in range(2, n + 1):
        row = rows[k - 1]
        new_table = {}
        for cols in itertools.combinations(range(n), k):
            acc_lo = 0.0
            acc_hi = 0.0
            for t, j in enumerate(cols):
                mlo, mhi = table[cols[:t] + cols[t + 1:]]
                elo, ehi = row[j]
                p1, p2, p3, p4 = elo * mlo, elo * mhi, ehi * mlo, ehi * mhi
                plo = nxt(min(p1, p2, p3, p4), -inf)
                phi = nxt(max(p1, p2, p3, p4), inf)
                if ((k - 1) + t) % 2 == 1:
                    plo, phi = -phi, -plo
                acc_lo = nxt(acc_lo + plo, -inf)
                acc_hi = nxt(acc_hi + phi, inf)
            if acc_lo <= 0.0 <= acc_hi or not (math.isfinite(acc_lo) and math.isfinite(acc_hi)):
                return False
            new_table[cols] = (acc_lo, acc_hi)
        table = new_table
    return True


def is_sm_matrix(m: IntervalMatrix) -> bool:
    """Strong-monotone test: every k-order minor from the first k rows is
    sign-definite, for every k."""
    if m.n_rows != m.n_cols:
        raise ValueError("S-M test requires a square matrix")
    return _scan_sm(_raw_rows(m))


def is_sm_raw(jac_lo: np.ndarray, jac_hi: np.ndarray) -> bool:
    rows = tuple(
        tuple((float(jac_lo[i, j]), float(jac_hi[i, j])) for j in range(jac_lo.shape[1]))
        for i in range(jac_lo.shape[0])
    )
    return _scan_sm(rows)


def is_om_matrix(m: IntervalMatrix) -> bool:
    """Opposite-monotone test: the signed last-row cofactor minors are
    matched with the last row itself."""
    if m.n_rows != m.n_cols:
        raise ValueError("O-M test requires a square matrix")
    n = m.n_rows
    if n == 1:
        return iv_sign(m.entry(0, 0)) != Sign.INDETERMINATE
    from .intervals import leading_minor_table

    top = IntervalMatrix(m.rows[: n - 1])
    table = leading_minor_table(top, max_order=n - 1)
    cof = []
    all_cols = tuple(range(n))
    for i in range(n):
        cols = all_cols[:i] + all_cols[i + 1:]
        minor = table[cols]
        # (-1)^(i+n) with 1-based row/column indices
        if ((i + 1) + n) % 2 == 1:
            minor = -minor
        cof.append(minor)
    return matched(cof, m.row(n - 1))


# -- rotations -----------------------------------------------------------------


@dataclass(frozen=True)
class SMRotation:
    """A verified strong-monotone rotation matrix for the preconditioner."""

    matrix: np.ndarray
    scale: int
    seed: int

    def __post_init__(self) -> None:
        self.matrix.setflags(write=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def _point_interval_matrix(a: np.ndarray) -> IntervalMatrix:
    return IntervalMatrix.from_rows(
        [[Interval(float(v), float(v)) for v in row] for row in a]
    )


def make_sm_rotation(
    n: int,
    scale: Optional[int] = None,
    seed: int = 0,
    randomize_signs: bool = False,
    max_draws: int = 1000,
) -> SMRotation:
    """Draw a rotation with diagonal +-N and off-diagonals uniform in [-1,1]
    until the exact S-M verification passes.  Deterministic per seed."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    N = max(n, 3) if scale is None else scale
    if N < n:
        raise ValueError(f"rotation scale must be >= n (got {N} < {n})")
    if n == 1:
        return SMRotation(np.array([[float(N)]]), N, seed)
    rng = random.Random(seed)
    for _ in range(max_draws):
        V = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                if i == j:
                    s = (-1.0) ** i
                    if randomize_signs and rng.random() < 0.5:
                        s = -s
                    V[i, j] = s * N
                else:
                    V[i, j] = rng.uniform(-1.0, 1.0)
        if is_sm_matrix(_point_interval_matrix(V)):
            return SMRotation(V, N, seed)
    raise RotationSearchError(
        f"no S-M rotation found in {max_draws} draws (n={n}, N={N}); try a larger scale"
    )


# -- the lazy preconditioned system ---------------------------------------------


def _combine(m: np.ndarray, vlo: np.ndarray, vhi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Rigorous enclosure of m @ [vlo, vhi] along the last axis.

    vlo/vhi: (..., t); m: (r, t); result: (..., r).  A dot-product error
    bound is subtracted/added so reassociated numpy sums stay outward.
    """
    pos = np.where(m > 0.0, m, 0.0)
    neg = m - pos
    lo = vlo @ pos.T + vhi @ neg.T
    hi = vhi @ pos.T + vlo @ neg.T
    mag = np.maximum(np.abs(vlo), np.abs(vhi)) @ np.abs(m).T
    err = (m.shape[1] + 2) * _U * mag
    return np.nextafter(lo - err, -np.inf), np.nextafter(hi + err, np.inf)


class PrecondSystem:
    """G = M * F^T over the free variables of a (possibly restricted) system.

    ``matrix`` may be None, meaning the identity: G is then just the first
    ``n_funcs`` functions of the base.  Restriction and dropping the trailing
    function are cheap views; nothing is ever expanded symbolically.
    """

    def __init__(
        self,
        restricted: RestrictedSystem,
        matrix: Optional[np.ndarray],
        n_funcs: Optional[int] = None,
        origin_box: Optional[NBox] = None,
    ) -> None:
        self.rs = restricted
        self.matrix = matrix
        if matrix is not None:
            self.n_funcs = matrix.shape[0]
            if matrix.shape[1] != restricted.base.n:
                raise ValueError("preconditioner matrix width must match the base system")
        else:
            self.n_funcs = restricted.base.n if n_funcs is None else n_funcs
        self.origin_box = origin_box

    @property
    def dim(self) -> int:
        return self.rs.n_free

    @property
    def free(self) -> Tuple[int, ...]:
        return self.rs.free

    def restrict_free(self, pos: int, value: float) -> "PrecondSystem":
        orig = self.rs.free[pos]
        return PrecondSystem(self.rs.restrict(orig, value), self.matrix, self.n_funcs, self.origin_box)

    def drop_last(self) -> "PrecondSystem":
        if self.n_funcs <= 1:
            raise ValueError("cannot drop the only function")
        mat = self.matrix[:-1] if self.matrix is not None else None
        return PrecondSystem(self.rs, mat, self.n_funcs - 1, self.origin_box)

    # -- interval values -------------------------------------------------------

    def _base_values_interval(self, lo: np.ndarray, hi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        full_lo, full_hi = self.rs.assemble_batch(lo, hi)
        return tp.eval_interval_batch(self.rs.base.func_tape(), full_lo, full_hi)

    def funcs_interval_batch(self, lo: np.ndarray, hi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """G values over K free-variable boxes: arrays of shape (K, n_funcs)."""
        vlo, vhi = self._base_values_interval(lo, hi)
        if self.matrix is None:
            return vlo[:, : self.n_funcs], vhi[:, : self.n_funcs]
        return _combine(self.matrix, vlo, vhi)

    def func_interval(self, j: int, free_box: NBox) -> Interval:
        lo = np.array([[iv.lo for iv in free_box.dims]])
        hi = np.array([[iv.hi for iv in free_box.dims]])
        glo, ghi = self.funcs_interval_batch(lo, hi)
        if np.isnan(glo[0, j]) or np.isnan(ghi[0, j]):
            raise EvaluationError("interval evaluation left the domain")
        return Interval(float(glo[0, j]), float(ghi[0, j]))

    def funcs_interval_at_vertices(self, free_box: NBox) -> Tuple[np.ndarray, np.ndarray]:
        """G values at all vertices of the box, as degenerate-input intervals."""
        pts = np.array(free_box.vertices())
        return self.funcs_interval_batch(pts, pts.copy())

    def funcs_interval_at_point(self, p_free: Sequence[float]) -> List[Interval]:
        pt = np.array([list(p_free)], dtype=float)
        glo, ghi = self.funcs_interval_batch(pt, pt.copy())
        out = []
        for j in range(self.n_funcs):
            if np.isnan(glo[0, j]) or np.isnan(ghi[0, j]):
                raise EvaluationError("interval evaluation left the domain")
            out.append(Interval(float(glo[0, j]), float(ghi[0, j])))
        return out

    def funcs_enclosure(self, free_box: NBox) -> Tuple[np.ndarray, np.ndarray]:
        """Tightened value enclosure over one box: the natural extension met
        with the mean-value form g(m) + J_G(box)(box - m).

        The mean-value side restores cancellations the lazy combination
        loses (rows of M mixing base functions that share terms)."""
        lo = np.array([[iv.lo for iv in free_box.dims]])
        hi = np.array([[iv.hi for iv in free_box.dims]])
        nat_lo, nat_hi = self.funcs_interval_batch(lo, hi)
        mid = 0.5 * (lo + hi)
        fm_lo, fm_hi = self.funcs_interval_batch(mid, mid.copy())
        jlo, jhi = self.jacobian_raw(free_box)  # (n_funcs, dim)
        r_lo = np.nextafter(lo[0] - mid[0], -np.inf)
        r_hi = np.nextafter(hi[0] - mid[0], np.inf)
        tlo, thi = tp.iv_mul_arrays(jlo, jhi, r_lo[None, :], r_hi[None, :])
        fc_lo, fc_hi = tp.mean_value_add(fm_lo[0], fm_hi[0], tlo, thi)
        return tp.intersect_enclosures(nat_lo[0], nat_hi[0], fc_lo, fc_hi)

    # -- interval Jacobian -------------------------------------------------------

    def jacobian_raw(self, free_box: NBox) -> Tuple[np.ndarray, np.ndarray]:
        """J_G over the box w.r.t. free variables: (n_funcs, dim) lo/hi arrays."""
        lo = np.array([[iv.lo for iv in free_box.dims]])
        hi = np.array([[iv.hi for iv in free_box.dims]])
        full_lo, full_hi = self.rs.assemble_batch(lo, hi)
        jlo, jhi = tp.eval_interval_batch(self.rs.base.jac_tape(), full_lo, full_hi)
        nb = self.rs.base.n
        jlo = jlo.reshape(nb, nb)[:, list(self.free)]
        jhi = jhi.reshape(nb, nb)[:, list(self.free)]
        return self._combine_jacobian(jlo, jhi)

    def _combine_jacobian(self, jlo: np.ndarray, jhi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if self.matrix is None:
            return jlo[: self.n_funcs], jhi[: self.n_funcs]
        glo, ghi = _combine(self.matrix, jlo.T, jhi.T)
        return glo.T, ghi.T

    def jacobian_interval(self, free_box: NBox) -> IntervalMatrix:
        jlo, jhi = self.jacobian_raw(free_box)
        if np.isnan(jlo).any() or np.isnan(jhi).any():
            raise EvaluationError("Jacobian interval evaluation left the domain")
        return IntervalMatrix.from_rows(
            [
                [Interval(float(jlo[i, j]), float(jhi[i, j])) for j in range(jlo.shape[1])]
                for i in range(jlo.shape[0])
            ]
        )

    # -- float values ---------------------------------------------------------

    def funcs_point(self, p_free: Sequence[float]) -> np.ndarray:
        full = np.array([self.rs.assemble_point(p_free)])
        vals = tp.eval_point_batch(self.rs.base.func_tape(), full)[0]
        if self.matrix is None:
            return vals[: self.n_funcs]
        return self.matrix @ vals

    def jacobian_point(self, p_free: Sequence[float]) -> np.ndarray:
        full = np.array([self.rs.assemble_point(p_free)])
        nb = self.rs.base.n
        vals = tp.eval_point_batch(self.rs.base.jac_tape(), full)[0].reshape(nb, nb)
        vals = vals[:, list(self.free)]
        if self.matrix is None:
            return vals[: self.n_funcs]
        return self.matrix @ vals


SystemLike = Union[FuncSystem, RestrictedSystem, PrecondSystem]


def wrap_system(system: SystemLike) -> PrecondSystem:
    """View any system as an identity-preconditioned one."""
    if isinstance(system, PrecondSystem):
        return system
    if isinstance(system, FuncSystem):
        return PrecondSystem(RestrictedSystem(system, ()), None)
    return PrecondSystem(system, None, n_funcs=system.n_free)


def precondition(
    system: Union[FuncSystem, RestrictedSystem],
    box: NBox,
    rotation: Union[SMRotation, np.ndarray],
) -> PrecondSystem:
    """Build G = V * J_F(m(box))^-1 * F^T as a lazy linear combination.

    Raises NotInvertibleError when the midpoint Jacobian cannot be trusted;
    the caller then splits the box instead of preconditioning.
    """
    V = rotation.matrix if isinstance(rotation, SMRotation) else np.asarray(rotation, dtype=float)
    g = wrap_system(system)
    J = g.jacobian_point(box.midpoint)
    inv = invert_with_guard(J)
    rs = system if isinstance(system, RestrictedSystem) else RestrictedSystem(system, ())
    return PrecondSystem(rs, V @ inv, origin_box=box)


def is_sm_system(system: SystemLike, box: NBox) -> bool:
    """Evaluate J_G over the box and run the S-M matrix test.

    Evaluation failures (domain violations on the box) count as not verified.
    """
    g = wrap_system(system)
    if g.n_funcs != g.dim:
        raise ValueError("S-M system test requires a square system")
    try:
        jlo, jhi = g.jacobian_raw(box)
    except EvaluationError:
        return False
    if np.isnan(jlo).any() or np.isnan(jhi).any():
        return False
    return is_sm_raw(jlo, jhi)


def rows_sign_definite(jlo: np.ndarray, jhi: np.ndarray) -> Tuple[bool, ...]:
    """Which Jacobian rows are entrywise sign-definite on the box.

    Such a row makes the vertex-sign shortcut valid for its function on every
    sub-box (the hypothesis of the monotone vertex lemma holds a fortiori)."""
    ok = (jlo > 0.0) | (jhi < 0.0)
    return tuple(bool(v) for v in ok.all(axis=1))
