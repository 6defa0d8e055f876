"""The recursive existence test: worked example, base cases, refinement."""

from __future__ import annotations

import random

import numpy as np
import pytest

from boxroots.intervals import Interval, NBox, Sign
from boxroots.existence import (
    FaceIndex,
    Outcome,
    existence,
    refine_face_root,
    vertex_sign,
)
from boxroots.monotone import is_sm_system, make_sm_rotation, precondition, wrap_system
from boxroots.systems import FuncSystem, NotInvertibleError

from oracles import cluster_cells, multistart_roots, newton_polish, sign_grid_cells


def worked_system():
    return FuncSystem.from_strings(
        ["x", "y", "z"],
        ["x - y + z", "y^2 + x + y + 2*z", "x^2 + y*z - 3*x - y + z"],
    )


class TestVertexSign:
    def test_restricted_quadratic_positive(self):
        g = wrap_system(worked_system()).restrict_free(2, 0.1)
        box = NBox.from_bounds([[-0.1, 0.1]] * 2)
        assert vertex_sign(g, 1, box) is Sign.POS

    def test_plane_positive_quadrant(self):
        F = FuncSystem.from_strings(["x", "y"], ["x + y", "x - y"])
        assert vertex_sign(F, 0, NBox.from_bounds([[1, 2], [1, 2]])) is Sign.POS

    def test_mixed_vertices_indeterminate(self):
        F = FuncSystem.from_strings(["x", "y"], ["x - y", "x + y"])
        assert vertex_sign(F, 0, NBox.from_bounds([[0, 1], [0, 1]])) is Sign.INDETERMINATE


class TestExistence:
    def test_worked_example_unique_through_x_faces(self):
        F = worked_system()
        box = NBox.from_bounds([[-0.1, 0.1]] * 3)
        assert is_sm_system(F, box)
        res = existence(F, box, eps_b=1e-6)
        assert res.outcome is Outcome.UNIQUE
        assert res.faces is not None
        assert {f.dim for f in res.faces} == {0}
        assert {f.value for f in res.faces} == {-0.1, 0.1}

    def test_univariate_sign_change(self):
        F = FuncSystem.from_strings(["x"], ["x - 0.5"])
        res = existence(F, NBox.from_bounds([[0, 1]]), eps_b=1e-6)
        assert res.outcome is Outcome.UNIQUE

    def test_univariate_no_sign_change(self):
        F = FuncSystem.from_strings(["x"], ["x - 5"])
        assert existence(F, NBox.from_bounds([[0, 1]]), 1e-6).outcome is Outcome.EMPTY

    def test_univariate_boundary_zero_is_unknown(self):
        F = FuncSystem.from_strings(["x"], ["x - 1"])
        assert existence(F, NBox.from_bounds([[0, 1]]), 1e-6).outcome is Outcome.UNKNOWN

    def test_all_faces_excluded_is_empty(self):
        F = FuncSystem.from_strings(["x", "y"], ["x - 5", "y - 5"])
        res = existence(F, NBox.from_bounds([[0, 1], [0, 1]]), 1e-6)
        assert res.outcome is Outcome.EMPTY

    def test_corner_zero_is_unknown(self):
        F = FuncSystem.from_strings(["x", "y"], ["2*x + 0.3*y", "0.2*x - 2*y"])
        res = existence(F, NBox.from_bounds([[0, 1], [0, 1]]), 1e-6)
        assert res.outcome is Outcome.UNKNOWN

    def test_unique_on_centered_linear(self):
        F = FuncSystem.from_strings(["x", "y"], ["2*x + 0.3*y", "0.2*x - 2*y"])
        res = existence(F, NBox.from_bounds([[-0.4, 0.6], [-0.5, 0.5]]), 1e-6)
        assert res.outcome is Outcome.UNIQUE

    def test_debug_reverification(self):
        F = worked_system()
        box = NBox.from_bounds([[-0.1, 0.1]] * 3)
        res = existence(F, box, eps_b=1e-6, debug=True)
        assert res.outcome is Outcome.UNIQUE


class TestRefineFaceRoot:
    def test_affine_root_refined_in_one_step(self):
        F = FuncSystem.from_strings(["x"], ["x - 0.25"])
        out = refine_face_root(F, NBox.from_bounds([[0, 1]]), eps_b=1e-3)
        assert out.width <= 1e-3
        assert out.contains_point((0.25,))

    def test_worked_face_system_contains_oracle_root(self):
        F = worked_system()
        face = wrap_system(F).restrict_free(0, 0.1).drop_last()
        # oracle: the unique zero of (f1, f2)|x=0.1 inside the face square
        face_sys = FuncSystem.from_strings(
            ["y", "z"], ["0.1 - y + z", "y^2 + 0.1 + y + 2*z"]
        )
        roots = multistart_roots(face_sys, [(-0.1, 0.1)] * 2, n_starts=300, seed=1)
        assert len(roots) == 1
        out = refine_face_root(face, NBox.from_bounds([[-0.1, 0.1]] * 2), eps_b=1e-6)
        assert out.width <= 1e-6
        assert out.contains_point(tuple(roots[0]))

    def test_width_never_stalls_above_halving(self):
        F = FuncSystem.from_strings(["x", "y"], ["x + 0.3*y - 0.11", "0.2*x - y + 0.37"])
        box = NBox.from_bounds([[-1, 1], [-1, 1]])
        prev = box.width
        cur = box
        for _ in range(8):
            nxt = refine_face_root(wrap_system(F), cur, eps_b=prev / 2)
            assert nxt.width <= prev / 2 or nxt.width <= 1e-12
            cur, prev = nxt, nxt.width
            if prev < 1e-9:
                break


class TestSoundnessAgainstGridOracle:
    def test_seeded_2d_systems(self):
        # the full 50-seed sweep runs in the acceptance suite
        from oracles import existence_soundness_sweep

        unique, empty = existence_soundness_sweep(12)
        assert unique >= 5
        assert empty >= 3
