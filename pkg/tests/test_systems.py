"""Systems: Jacobians, restriction overlays, midpoint inversion, file I/O."""

from __future__ import annotations

import json
import random

import numpy as np
import pytest

from boxroots import expressions as ex
from boxroots.intervals import Interval, NBox, iv_det, IntervalMatrix
from boxroots.systems import (
    FuncSystem,
    NotInvertibleError,
    RestrictedSystem,
    invert_midpoint_jacobian,
    parse_system,
    system_to_json,
)

from oracles import random_expr


EX2_EQS = [
    "2*y^2 - z^2 + 2*x + 0.16",
    "x^2 + x + 3*y - z - 0.02",
    "3*x^2 - 5.08*x - 0.2492 - 4*y^2 - 6*z + 3*z^2 + 3*y",
]


def linear_system():
    return FuncSystem.from_strings(
        ["x", "y", "z"], ["x - y + z", "y^2 + x + y + 2*z", "x^2 + y*z - 3*x - y + z"]
    )


class TestJacobian:
    def test_linear_row(self):
        F = linear_system()
        row = F.jacobian_exprs()[0]
        vals = [ex.eval_point(e, (0.3, -0.2, 0.9)) for e in row]
        assert vals == [1.0, -1.0, 1.0]

    def test_tangent_minors_from_worked_example(self):
        G = FuncSystem.from_strings(
            ["x", "y", "z"], ["x^2/2 + y^2 - 2*z^2", "x^2/2 + y^2/2 - z^2/2 - 1/2", "x"]
        )
        B = NBox.from_bounds([[0.10, 0.11]] * 3)
        jac = G.jacobian_interval(B)
        expected = {0: (0.0158, 0.0284), 1: (0.0279, 0.0384), 2: (-0.0142, -0.0079)}
        for drop, (lo, hi) in expected.items():
            cols = [j for j in range(3) if j != drop]
            sub = IntervalMatrix.from_rows(
                [[jac.entry(i, j) for j in cols] for i in range(2)]
            )
            d = iv_det(sub)
            assert d.lo <= lo + 1e-12 and hi - 1e-12 <= d.hi
            assert d.lo == pytest.approx(lo, abs=1e-9) and d.hi == pytest.approx(hi, abs=1e-9)

    def test_midpoint_jacobian_inverse_residual(self):
        F = FuncSystem.from_strings(["x", "y", "z"], EX2_EQS)
        B = NBox.from_bounds([[-0.09, -0.04], [0.01, 0.06], [0.01, 0.06]])
        inv = invert_midpoint_jacobian(F, B)
        J = F.jacobian_point(B.midpoint)
        assert np.abs(J @ inv - np.eye(3)).max() < 1e-10

    def test_identity_inverse(self):
        F = FuncSystem.from_strings(["x", "y"], ["x", "y"])
        inv = invert_midpoint_jacobian(F, NBox.from_bounds([[-1, 1], [-1, 1]]))
        assert np.allclose(inv, np.eye(2))

    def test_singular_midpoint_rejected(self):
        F = FuncSystem.from_strings(["x", "y"], ["x + y", "2*x + 2*y"])
        with pytest.raises(NotInvertibleError):
            invert_midpoint_jacobian(F, NBox.from_bounds([[-1, 1], [-1, 1]]))


class TestRestriction:
    def test_worked_restriction_value(self):
        F = linear_system()
        r = F.restrict(2, 0.1)  # z = 0.1 in f2 = y^2+x+y+2z
        assert r.eval_point(1, (0.1, 0.1)) == pytest.approx(0.41)
        assert r.eval_point(1, (0.1, -0.1)) == pytest.approx(0.21)

    def test_restrict_to_univariate(self):
        F = linear_system()
        r = F.restrict(1, 0.5).restrict(2, 0.25)
        assert r.free == (0,)
        assert r.eval_point(0, (2.0,)) == pytest.approx(2.0 - 0.5 + 0.25)

    def test_double_fix_rejected(self):
        F = linear_system()
        with pytest.raises(ValueError):
            F.restrict(1, 0.5).restrict(1, 0.2)

    def test_restricted_jacobian_equals_column_deletion(self):
        rng = random.Random(31)
        for _ in range(25):
            exprs = [random_expr(rng, 3, depth=3) for _ in range(3)]
            F = FuncSystem(["x", "y", "z"], exprs)
            i = rng.randrange(3)
            t = rng.uniform(-0.5, 0.5)
            r = F.restrict(i, t)
            p_free = [rng.uniform(-0.5, 0.5) for _ in range(2)]
            full = list(p_free)
            full.insert(i, t)
            try:
                jr = r.jacobian_point_rows(p_free)
                jf = F.jacobian_point(full)
            except ex.EvaluationError:
                continue
            cols = [j for j in range(3) if j != i]
            assert np.allclose(jr, jf[:, cols], rtol=1e-12, atol=1e-12)

    def test_restrict_then_differentiate_commutes(self):
        rng = random.Random(13)
        for _ in range(25):
            f = random_expr(rng, 3, depth=4)
            i = 1
            t = 0.3
            for j in (0, 2):
                d_then_r = ex.differentiate(f, j)
                p = [rng.uniform(-0.5, 0.5) for _ in range(3)]
                p[i] = t
                try:
                    a = ex.eval_point(d_then_r, p)
                except ex.EvaluationError:
                    continue
                rs = FuncSystem(["x", "y", "z"], [f, f, f]).restrict(i, t)
                jr = rs.jacobian_point_rows([p[0], p[2]], n_rows=1)
                col = 0 if j == 0 else 1
                assert jr[0, col] == pytest.approx(a, rel=1e-12, abs=1e-12)

    def test_interval_batch_assembly(self):
        F = linear_system()
        r = F.restrict(0, 0.1)
        box = NBox.from_bounds([[-0.1, 0.1], [-0.1, 0.1]])
        iv = r.eval_interval(0, box)  # f1 = 0.1 - y + z
        assert iv.lo == pytest.approx(-0.1, abs=1e-12)
        assert iv.hi == pytest.approx(0.3, abs=1e-12)


class TestSystemFiles:
    def test_parse_round_trip(self):
        payload = {
            "vars": ["x", "y"],
            "equations": ["x^2 - y", "x + y"],
            "box": [[-1, 1], [-2, 2]],
            "precision": 1e-5,
        }
        system, box, extras = parse_system(payload)
        assert system.n == 2
        assert box.bounds() == ((-1.0, 1.0), (-2.0, 2.0))
        assert extras == {"precision": 1e-5}
        text = system_to_json(system, box)
        system2, box2, _ = parse_system(json.loads(text))
        assert box2.bounds() == box.bounds()
        assert system_to_json(system2, box2) == text

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            parse_system({"vars": ["x", "y"], "equations": ["x"]})

    def test_box_dimension_mismatch(self):
        with pytest.raises(ValueError):
            parse_system({"vars": ["x"], "equations": ["x"], "box": [[0, 1], [0, 1]]})
