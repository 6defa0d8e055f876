"""Square nonlinear systems: evaluation, Jacobians, restriction to faces.

A :class:`FuncSystem` owns n expressions over n named variables.  Restriction
(fixing coordinates at box endpoints) is recorded as an overlay rather than
by rewriting trees, because the existence recursion restricts the same system
up to 2^(n-1) * n! times.
"""

from __future__ import annotations

import json
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import expressions as ex
from . import tape as tp
from .intervals import Interval, IntervalMatrix, NBox

__all__ = [
    "FuncSystem",
    "RestrictedSystem",
    "NotInvertibleError",
    "parse_system",
    "parse_system_json",
    "system_to_json",
    "jacobian",
    "jacobian_eval",
    "jacobian_point",
    "invert_midpoint_jacobian",
]

RCOND_FLOOR = 1e-12


class NotInvertibleError(ArithmeticError):
    """Midpoint Jacobian is singular or too ill-conditioned to trust."""


class FuncSystem:
    """A square system of n expressions in n variables."""

    def __init__(self, names: Sequence[str], exprs: Sequence[ex.Expr]) -> None:
        if len(names) != len(exprs):
            raise ValueError(
                f"system is not square: {len(names)} variables, {len(exprs)} equations"
            )
        if not names:
            raise ValueError("a system needs at least one variable")
        if len(set(names)) != len(names):
            raise ValueError("variable names must be distinct")
        self.names: Tuple[str, ...] = tuple(names)
        self.exprs: Tuple[ex.Expr, ...] = tuple(exprs)
        self.n = len(names)
        self._jac_exprs: Optional[Tuple[Tuple[ex.Expr, ...], ...]] = None
        self._func_tape: Optional[tp.Tape] = None
        self._jac_tape: Optional[tp.Tape] = None
        self._hess_tape: Optional[tp.Tape] = None

    @classmethod
    def from_strings(cls, names: Sequence[str], equations: Sequence[str]) -> "FuncSystem":
        exprs = [ex.parse_expression(text, names) for text in equations]
        return cls(names, exprs)

    def __repr__(self) -> str:
        return f"FuncSystem(n={self.n}, vars={list(self.names)})"

    # -- symbolic ----------------------------------------------------------

    def jacobian_exprs(self) -> Tuple[Tuple[ex.Expr, ...], ...]:
        if self._jac_exprs is None:
            self._jac_exprs = tuple(
                tuple(ex.differentiate(f, j) for j in range(self.n)) for f in self.exprs
            )
        return self._jac_exprs

    # -- tapes --------------------------------------------------------------

    def func_tape(self) -> tp.Tape:
        if self._func_tape is None:
            self._func_tape = tp.compile_exprs(self.exprs, self.n)
        return self._func_tape

    def jac_tape(self) -> tp.Tape:
        if self._jac_tape is None:
            flat = [e for row in self.jacobian_exprs() for e in row]
            self._jac_tape = tp.compile_exprs(flat, self.n)
        return self._jac_tape

    def hess_tape(self) -> tp.Tape:
        """Second partials d2 f_i / dx_j dx_k for k <= j, row-major in (i, j, k).

        Feeds the mean-value form of the Jacobian; symmetry halves the count.
        """
        if self._hess_tape is None:
            jac = self.jacobian_exprs()
            flat = [
                ex.differentiate(jac[i][j], k)
                for i in range(self.n)
                for j in range(self.n)
                for k in range(j + 1)
            ]
            self._hess_tape = tp.compile_exprs(flat, self.n)
        return self._hess_tape

    # -- evaluation ----------------------------------------------------------

    def eval_point(self, p: Sequence[float]) -> np.ndarray:
        return np.array([ex.eval_point(f, p) for f in self.exprs])

    def eval_interval(self, j: int, box: NBox) -> Interval:
        return ex.eval_interval(self.exprs[j], box)

    def jacobian_interval(self, box: NBox) -> IntervalMatrix:
        rows = [
            [ex.eval_interval(e, box) for e in row] for row in self.jacobian_exprs()
        ]
        return IntervalMatrix.from_rows(rows)

    def jacobian_point(self, p: Sequence[float]) -> np.ndarray:
        return np.array(
            [[ex.eval_point(e, p) for e in row] for row in self.jacobian_exprs()]
        )

    def restrict(self, i: int, value: float) -> "RestrictedSystem":
        return RestrictedSystem(self, ((i, float(value)),))


class RestrictedSystem:
    """A system with some coordinates frozen; evaluation runs over the free
    variables, re-indexed in ascending original order."""

    def __init__(self, base: FuncSystem, fixed: Sequence[Tuple[int, float]]) -> None:
        self.base = base
        seen: Dict[int, float] = {}
        for i, v in fixed:
            if i in seen:
                raise ValueError(f"variable index {i} fixed twice")
            if not 0 <= i < base.n:
                raise ValueError(f"variable index {i} out of range")
            seen[i] = v
        self.fixed: Tuple[Tuple[int, float], ...] = tuple(sorted(seen.items()))
        self.free: Tuple[int, ...] = tuple(
            i for i in range(base.n) if i not in seen
        )
        if not self.free:
            raise ValueError("restriction left no free variables")

    @property
    def n_free(self) -> int:
        return len(self.free)

    def restrict(self, i: int, value: float) -> "RestrictedSystem":
        if i not in self.free:
            raise ValueError(f"variable index {i} is already fixed")
        return RestrictedSystem(self.base, self.fixed + ((i, float(value)),))

    # -- assembly -------------------------------------------------------------

    def assemble_box(self, free_box: NBox) -> NBox:
        if free_box.n != self.n_free:
            raise ValueError("free box dimension mismatch")
        dims = [None] * self.base.n
        for (i, v) in self.fixed:
            dims[i] = Interval(v, v)
        for pos, i in enumerate(self.free):
            dims[i] = free_box.dims[pos]
        return NBox(tuple(dims))

    def assemble_point(self, p_free: Sequence[float]) -> Tuple[float, ...]:
        full = [0.0] * self.base.n
        for (i, v) in self.fixed:
            full[i] = v
        for pos, i in enumerate(self.free):
            full[i] = float(p_free[pos])
        return tuple(full)

    def assemble_batch(self, lo: np.ndarray, hi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        K = lo.shape[0]
        full_lo = np.empty((K, self.base.n))
        full_hi = np.empty((K, self.base.n))
        for (i, v) in self.fixed:
            full_lo[:, i] = v
            full_hi[:, i] = v
        for pos, i in enumerate(self.free):
            full_lo[:, i] = lo[:, pos]
            full_hi[:, i] = hi[:, pos]
        return full_lo, full_hi

    # -- evaluation -------------------------------------------------------------

    def eval_interval(self, j: int, free_box: NBox) -> Interval:
        return ex.eval_interval(self.base.exprs[j], self.assemble_box(free_box))

    def eval_point(self, j: int, p_free: Sequence[float]) -> float:
        return ex.eval_point(self.base.exprs[j], self.assemble_point(p_free))

    def jacobian_interval_rows(
        self, free_box: NBox, n_rows: Optional[int] = None
    ) -> Tuple[Tuple[Interval, ...], ...]:
        """Partials of the first ``n_rows`` functions w.r.t. the free variables."""
        full = self.assemble_box(free_box)
        jac = self.base.jacobian_exprs()
        r = self.base.n if n_rows is None else n_rows
        return tuple(
            tuple(ex.eval_interval(jac[i][j], full) for j in self.free)
            for i in range(r)
        )

    def jacobian_point_rows(self, p_free: Sequence[float], n_rows: Optional[int] = None) -> np.ndarray:
        full = self.assemble_point(p_free)
        jac = self.base.jacobian_exprs()
        r = self.base.n if n_rows is None else n_rows
        return np.array(
            [[ex.eval_point(jac[i][j], full) for j in self.free] for i in range(r)]
        )


# -- module-level conveniences ---------------------------------------------

def jacobian(system: FuncSystem) -> Tuple[Tuple[ex.Expr, ...], ...]:
    return system.jacobian_exprs()


def jacobian_eval(system: FuncSystem, box: NBox) -> IntervalMatrix:
    return system.jacobian_interval(box)


def jacobian_point(system: FuncSystem, p: Sequence[float]) -> np.ndarray:
    return system.jacobian_point(p)


def invert_midpoint_jacobian(system, box: NBox) -> np.ndarray:
    """Float inverse of the Jacobian at m(box); raises NotInvertibleError
    when singular or with reciprocal condition estimate below 1e-12."""
    mid = box.midpoint
    if isinstance(system, RestrictedSystem):
        J = system.jacobian_point_rows(mid, n_rows=system.n_free)
    else:
        J = system.jacobian_point(mid)
    return invert_with_guard(J)


def invert_with_guard(J: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(J)):
        raise NotInvertibleError("midpoint Jacobian has non-finite entries")
    try:
        inv = np.linalg.inv(J)
    except np.linalg.LinAlgError as exc:
        raise NotInvertibleError("midpoint Jacobian is singular") from exc
    norm = np.abs(J).sum(axis=1).max()
    inv_norm = np.abs(inv).sum(axis=1).max()
    if not np.isfinite(inv_norm) or norm * inv_norm > 1.0 / RCOND_FLOOR:
        raise NotInvertibleError("midpoint Jacobian too ill-conditioned")
    return inv


# -- system files -----------------------------------------------------------

def parse_system(payload: dict) -> Tuple[FuncSystem, Optional[NBox], dict]:
    """Build a system from the JSON file schema.

    Schema: {"vars": [...], "equations": [...], "box": [[lo,hi],...]} with
    optional "precision" and "epsilon_b" entries passed back to the caller.
    """
    if "vars" not in payload or "equations" not in payload:
        raise ValueError("system file needs 'vars' and 'equations'")
    names = payload["vars"]
    equations = payload["equations"]
    if len(names) != len(equations):
        raise ValueError(
            f"system is not square: {len(names)} variables, {len(equations)} equations"
        )
    system = FuncSystem.from_strings(names, equations)
    box = None
    if payload.get("box") is not None:
        bounds = payload["box"]
        if len(bounds) != system.n:
            raise ValueError(
                f"box has {len(bounds)} dimensions for {system.n} variables"
            )
        box = NBox.from_bounds(bounds)
    extras = {
        k: payload[k] for k in ("precision", "epsilon_b") if k in payload
    }
    return system, box, extras


def parse_system_json(text: str) -> Tuple[FuncSystem, Optional[NBox], dict]:
    return parse_system(json.loads(text))


def system_to_json(system: FuncSystem, box: Optional[NBox] = None, extras: Optional[dict] = None) -> str:
    payload: dict = {
        "vars": list(system.names),
        "equations": [ex.to_infix(f, system.names) for f in system.exprs],
    }
    if box is not None:
        payload["box"] = [[iv.lo, iv.hi] for iv in box.dims]
    if extras:
        payload.update(extras)
    return json.dumps(payload, indent=2)
