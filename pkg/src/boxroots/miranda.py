"""Miranda-style existence check (the MK test), for the comparison mode.

Miranda's theorem certifies a zero when each g_i takes strictly opposite
signs on the two opposite faces of its own coordinate direction.  Combined
with the Jacobian uniqueness test it yields an isolating box.  On the
preconditioned system the classical choice is G = J_F(m(B))^-1 F^T, i.e. an
identity rotation.
"""

from __future__ import annotations

from .expressions import EvaluationError
from .intervals import NBox, Sign, iv_sign
from .monotone import PrecondSystem, SystemLike, wrap_system

__all__ = ["miranda_certifies", "jacobian_excludes_second_root"]


def miranda_certifies(system: SystemLike, box: NBox) -> bool:
    """Opposite strict signs of g_i on the two x_i-faces, for every i."""
    g = wrap_system(system)
    n = g.dim
    if g.n_funcs != n:
        raise ValueError("Miranda test requires a square system")
    if n == 1:
        return _endpoint_signs(g, box)
    import numpy as np

    for i in range(n):
        signs = []
        for value in (box.dims[i].lo, box.dims[i].hi):
            face = g.restrict_free(i, value)
            try:
                lo, hi = face.funcs_enclosure(box.drop(i))
            except EvaluationError:
                return False
            if np.isnan(lo[i]) or np.isnan(hi[i]):
                return False
            if lo[i] > 0.0:
                s = 1
            elif hi[i] < 0.0:
                s = -1
            else:
                return False
            signs.append(s)
        if signs[0] * signs[1] >= 0:
            return False
    return True


def _endpoint_signs(g: PrecondSystem, box: NBox) -> bool:
    from .intervals import Interval

    try:
        s1 = iv_sign(g.func_interval(0, NBox((Interval.point(box.dims[0].lo),))))
        s2 = iv_sign(g.func_interval(0, NBox((Interval.point(box.dims[0].hi),))))
    except EvaluationError:
        return False
    return int(s1) * int(s2) < 0


def jacobian_excludes_second_root(system: SystemLike, box: NBox) -> bool:
    """Jacobian uniqueness test: 0 not in det(J_G(box))."""
    from .intervals import iv_det

    g = wrap_system(system)
    try:
        jac = g.jacobian_interval(box)
    except EvaluationError:
        return False
    return not iv_det(jac).contains_zero()
