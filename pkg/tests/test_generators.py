"""Seeded benchmark-family generation."""

from __future__ import annotations

import json

import numpy as np
import pytest

from boxroots import expressions as ex
from boxroots.generators import FamilyError, generate_payload, generate_system
from boxroots.polytools import poly_terms
from boxroots.systems import parse_system


class TestFamilies:
    def test_round_trip_is_fixed_point(self):
        payload = generate_payload("N2D5", terms=10, coeff=10, seed=1)
        system, box, _ = parse_system(payload)
        text1 = json.dumps(payload)
        payload2 = {
            "vars": list(system.names),
            "equations": [ex.to_infix(f, system.names) for f in system.exprs],
            "box": [[iv.lo, iv.hi] for iv in box.dims],
        }
        assert json.dumps(payload2) == text1
        system2, _, _ = parse_system(payload2)
        for f, g in zip(system.exprs, system2.exprs):
            assert f == g

    def test_structure_matches_family_parameters(self):
        system, box = generate_system("N3D9", terms=10, coeff=10, seed=4)
        assert system.n == 3
        assert box == [(-100.0, 100.0)] * 3
        for f in system.exprs:
            terms = poly_terms(f, 3)
            assert len(terms) == 10
            assert max(sum(m) for m in terms) <= 9
            assert all(abs(c) <= 10 and c == int(c) and c != 0 for c in terms.values())

    def test_seed_determinism(self):
        a = generate_payload("N4D7", seed=9)
        b = generate_payload("N4D7", seed=9)
        assert json.dumps(a) == json.dumps(b)
        c = generate_payload("N4D7", seed=10)
        assert json.dumps(a) != json.dumps(c)

    def test_scaled_variant_box(self):
        system, box = generate_system("N2D5E", seed=1)
        assert box == [(-1.0, 1.0)] * 2
        base, _ = generate_system("N2D5", seed=1)
        # same zeros up to the x -> 100 x substitution
        p = (0.31, -0.62)
        scaled_val = ex.eval_point(system.exprs[0], p)
        base_val = ex.eval_point(base.exprs[0], (31.0, -62.0))
        assert scaled_val == pytest.approx(base_val, rel=1e-9)

    def test_multi_family_is_product_and_partial(self):
        system, box = generate_system("multiN2D6", seed=2)
        assert system.n == 2
        f1, f2 = system.exprs
        d = ex.differentiate(f1, 1)
        rng = np.random.default_rng(0)
        for _ in range(20):
            p = rng.uniform(-1, 1, 2)
            assert ex.eval_point(f2, p) == pytest.approx(ex.eval_point(d, p), rel=1e-10, abs=1e-10)
        assert max(sum(m) for m in poly_terms(f1, 2)) <= 6

    def test_multi_three_variables(self):
        system, _ = generate_system("multiN3D6", seed=2)
        assert system.n == 3

    def test_bad_families_rejected(self):
        for bad in ("X2D5", "N0D5", "N2D0", "multiN1D4", "multiN2D6E"):
            with pytest.raises(FamilyError):
                generate_system(bad)

    def test_impossible_support_rejected(self):
        with pytest.raises(FamilyError):
            generate_system("N1D1", terms=10)

    def test_box_override(self):
        payload = generate_payload("N2D5", seed=1, box=[[-2, 2], [-2, 2]])
        assert payload["box"] == [[-2, 2], [-2, 2]]
        with pytest.raises(ValueError):
            generate_payload("N2D5", seed=1, box=[[-2, 2]])
