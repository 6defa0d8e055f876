"""Seeded random benchmark families (NiDj naming: i variables, degree j).

NiDj draws dense-support polynomials: exactly ``terms`` distinct monomials
of total degree <= j with nonzero integer coefficients in [-coeff, coeff].
The E suffix rescales coordinates by 100 so roots in [-100,100]^n are found
inside [-1,1]^n.  multiNiDj builds systems with singular zeros: f1 = f*g and
f2 = d f1 / d x2 from two random 4-term factors (and a random f3 for n=3).

Everything is deterministic per seed, and files round-trip through the
parser: generate -> parse -> serialize -> parse is a fixed point.
"""

from __future__ import annotations

import random
import re
from typing import Dict, List, Optional, Sequence, Tuple

from . import expressions as ex
from .systems import FuncSystem

__all__ = ["FamilyError", "generate_system", "generate_payload"]

_FAMILY_RE = re.compile(r"^(multi)?N(\d+)D(\d+)(E?)$")


class FamilyError(ValueError):
    """Unrecognized family descriptor."""


def generate_payload(
    family: str,
    terms: int = 10,
    coeff: int = 10,
    seed: int = 0,
    box: Optional[Sequence[Sequence[float]]] = None,
) -> dict:
    """System-file payload (dict) for a seeded random family member."""
    system, default_box = generate_system(family, terms, coeff, seed)
    bounds = [list(b) for b in (box if box is not None else default_box)]
    if len(bounds) != system.n:
        raise ValueError(f"box has {len(bounds)} dimensions for {system.n} variables")
    return {
        "vars": list(system.names),
        "equations": [ex.to_infix(f, system.names) for f in system.exprs],
        "box": bounds,
    }


def generate_system(
    family: str, terms: int = 10, coeff: int = 10, seed: int = 0
) -> Tuple[FuncSystem, List[Tuple[float, float]]]:
    m = _FAMILY_RE.match(family)
    if m is None:
        raise FamilyError(
            f"unknown family {family!r}; expected NiDj, NiDjE, or multiNiDj"
        )
    multi, n, degree, scaled = bool(m.group(1)), int(m.group(2)), int(m.group(3)), bool(m.group(4))
    if n < 1 or degree < 1 or terms < 1:
        raise FamilyError("family needs n >= 1, degree >= 1, terms >= 1")
    if multi and scaled:
        raise FamilyError("multi families have no E variant")
    rng = random.Random(seed)
    names = [f"x{i + 1}" for i in range(n)]
    if multi:
        if n < 2:
            raise FamilyError("multi families need at least 2 variables")
        system = _multi_system(rng, names, n, degree, coeff)
        return system, [(-1.0, 1.0)] * n
    exprs = [
        terms_to_tree(_random_terms(rng, n, degree, terms, coeff)) for _ in range(n)
    ]
    system = FuncSystem(names, exprs)
    if scaled:
        from .isolator import scale_coordinates

        return scale_coordinates(system, [100.0] * n), [(-1.0, 1.0)] * n
    return system, [(-100.0, 100.0)] * n


def _random_terms(
    rng: random.Random, n: int, degree: int, terms: int, coeff: int
) -> Dict[Tuple[int, ...], int]:
    out: Dict[Tuple[int, ...], int] = {}
    guard = 0
    while len(out) < terms:
        guard += 1
        if guard > 10000 * terms:
            raise FamilyError(
                f"cannot place {terms} distinct monomials of degree <= {degree} in {n} variables"
            )
        m = tuple(rng.randint(0, degree) for _ in range(n))
        if sum(m) > degree or m in out:
            continue
        c = rng.randint(1, coeff) * rng.choice((-1, 1))
        out[m] = c
    return out


def terms_to_tree(terms: Dict[Tuple[int, ...], int]) -> ex.Expr:
    parts = []
    for m in sorted(terms):
        factor: ex.Expr = ex.Const(float(terms[m]))
        for i, e in enumerate(m):
            if e:
                factor = ex.mul(factor, ex.pow_int(ex.Var(i), e))
        parts.append(factor)
    tree = parts[0]
    for p in parts[1:]:
        tree = ex.add(tree, p)
    return tree


def _multi_system(
    rng: random.Random, names: List[str], n: int, degree: int, coeff: int
) -> FuncSystem:
    df = degree // 2
    dg = degree - df
    f = terms_to_tree(_random_terms(rng, n, df, 4, coeff))
    g = terms_to_tree(_random_terms(rng, n, dg, 4, coeff))
    f1 = ex.mul(f, g)
    f2 = ex.differentiate(f1, 1)
    exprs = [f1, f2]
    for _ in range(n - 2):
        exprs.append(terms_to_tree(_random_terms(rng, n, degree, 4, coeff)))
    return FuncSystem(names, exprs)
