"""The subdivision loop: exclusion, preconditioning, certification, results.

Per box the pipeline is: interval exclusion; precondition with the run's
rotation; strong-monotone check of the preconditioned Jacobian; recursive
existence test.  A unique zero certifies the box, a verified-empty box is
dropped, Unknown goes to the suspected set, and everything else splits until
the termination width.  Suspected boxes get a best-effort Newton
post-processing pass with re-certification of the polished points.

Work is shared by a pool of threads over one LIFO stack; every per-box stage
is a pure function of (system, box, rotation, config), so the sorted result
sets are independent of worker count and interleaving.  The batched interval
evaluations release the GIL inside numpy.
"""

from __future__ import annotations

import threading
import time
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import expressions as ex
from . import tape as tp
from .existence import Outcome, existence
from .intervals import Interval, NBox
from .monotone import (
    PrecondSystem,
    SMRotation,
    _combine,
    is_sm_raw,
    make_sm_rotation,
    rows_sign_definite,
)
from .miranda import jacobian_excludes_second_root, miranda_certifies
from .polytools import (
    NonPolynomialError,
    collapse_to_univariate,
    poly_terms,
    terms_to_expr,
    vanish_intervals,
)
from .systems import FuncSystem, NotInvertibleError, RestrictedSystem, invert_with_guard

__all__ = [
    "Config",
    "IsolationResult",
    "RefinedRoot",
    "RunStats",
    "exclusion",
    "candidates",
    "isolate",
    "postprocess_suspected",
    "invert_coordinates",
    "scale_coordinates",
]

_CHUNK = 256


@dataclass
class Config:
    """Knobs for one isolation run; all randomness flows from ``seed``."""

    epsilon: float = 1e-6
    epsilon_b: Optional[float] = None
    rotation_scale: Optional[int] = None
    seed: int = 0
    workers: int = 1
    max_boxes: int = 5_000_000
    candidate_strategy: str = "plain"
    postprocess: bool = True
    # pre-splitting saves re-derivation on large boxes but plants cut planes
    # through grid-aligned roots, so it is opt-in
    presplit_depth: int = 0
    candidate_grid: int = 8
    debug: bool = False
    rotation_matrix: Optional[np.ndarray] = None

    def resolved_eps_b(self) -> float:
        return self.epsilon / 4.0 if self.epsilon_b is None else self.epsilon_b

    def validate(self, box: NBox) -> None:
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        eps_b = self.resolved_eps_b()
        if not 0.0 < eps_b <= self.epsilon:
            raise ValueError("epsilon_b must satisfy 0 < epsilon_b <= epsilon")
        if self.epsilon >= box.width:
            raise ValueError(
                f"epsilon {self.epsilon} is not below the initial box width {box.width}"
            )
        if self.candidate_strategy not in ("plain", "sleeve"):
            raise ValueError("candidate_strategy must be 'plain' or 'sleeve'")


@dataclass(frozen=True)
class RefinedRoot:
    point: Tuple[float, ...]
    residual: float
    cluster: int
    certified: bool


@dataclass
class RunStats:
    processed: int = 0
    excluded: int = 0
    not_invertible: int = 0
    sm_failed: int = 0
    unique: int = 0
    empty: int = 0
    unknown: int = 0
    splits: int = 0
    suspected_min_width: int = 0
    suspected_unknown: int = 0
    sleeve_cells_pruned: int = 0
    incomplete: bool = False
    unprocessed: int = 0
    wall_time: float = 0.0

    def as_dict(self) -> Dict[str, float]:
        return dict(self.__dict__)


@dataclass
class IsolationResult:
    certified: List[NBox]
    suspected: List[NBox]
    refined: List[RefinedRoot]
    stats: RunStats

    def root_count(self) -> int:
        """Certified boxes plus re-certified polished points outside them."""
        extra = 0
        for r in self.refined:
            if r.certified and not any(b.contains_point(r.point) for b in self.certified):
                extra += 1
        return len(self.certified) + extra


def exclusion(system: FuncSystem, box: NBox) -> bool:
    """True iff some equation's interval evaluation excludes zero (so the
    box provably contains no zero of the system)."""
    for j in range(system.n):
        try:
            if not system.eval_interval(j, box).contains_zero():
                return True
        except ex.EvaluationError:
            continue
    return False


# -- sleeve candidates --------------------------------------------------------

def candidates(system: FuncSystem, box: NBox, grid: int) -> List[NBox]:
    """Candidate sub-boxes from sleeve polynomials in the last variable.

    The leading n-1 dimensions are cut into ``grid`` slices each; on every
    cell each equation collapses to a univariate interval polynomial whose
    possible-zero ranges are intersected across equations.  Sound: every
    zero of the system in ``box`` lies in some returned candidate.
    """
    n = system.n
    for f in system.exprs:
        poly_terms(f, n)  # raises NonPolynomialError on non-polynomial input
    sleeve_domain = box.dims[-1]
    min_width = sleeve_domain.width / 256.0
    cells = _grid_cells(box.dims[:-1], grid)
    out: List[NBox] = []
    for cell in cells:
        ranges = [sleeve_domain]
        for f in system.exprs:
            coeffs = collapse_to_univariate(f, cell, n)
            nxt: List[Interval] = []
            for j in ranges:
                nxt.extend(vanish_intervals(coeffs, j, min_width))
            ranges = nxt
            if not ranges:
                break
        for j in ranges:
            out.append(NBox(tuple(cell) + (j,)))
    return out


def _grid_cells(dims: Tuple[Interval, ...], grid: int) -> List[Tuple[Interval, ...]]:
    if not dims:
        return [()]
    cells: List[Tuple[Interval, ...]] = [()]
    for iv in dims:
        cuts = np.linspace(iv.lo, iv.hi, grid + 1)
        pieces = [Interval(float(cuts[k]), float(cuts[k + 1])) for k in range(grid)]
        cells = [c + (p,) for c in cells for p in pieces]
    return cells


# -- the main loop -------------------------------------------------------------

class _Shared:
    def __init__(self, stack: List[NBox], max_boxes: int) -> None:
        self.stack = stack
        self.lock = threading.Lock()
        self.cond = threading.Condition(self.lock)
        self.active = 0
        self.budget = max_boxes
        self.incomplete = False
        self.unprocessed = 0
        self.certified: List[NBox] = []
        self.suspected: List[NBox] = []
        self.stats = RunStats()


def isolate(
    system: FuncSystem,
    box0: NBox,
    cfg: Optional[Config] = None,
    method: str = "sm",
) -> IsolationResult:
    """Isolate the real zeros of ``system`` inside ``box0``.

    ``method`` selects the certification core: "sm" (strong-monotone
    existence) or "mk" (Miranda + Jacobian test, for the comparison mode).
    """
    cfg = cfg or Config()
    if box0.n != system.n:
        raise ValueError(f"box has {box0.n} dimensions for a {system.n}-variable system")
    cfg.validate(box0)
    if method not in ("sm", "mk"):
        raise ValueError("method must be 'sm' or 'mk'")

    if cfg.rotation_matrix is not None:
        rotation = np.asarray(cfg.rotation_matrix, dtype=float)
    elif method == "mk":
        rotation = np.eye(system.n)
    else:
        rotation = make_sm_rotation(system.n, cfg.rotation_scale, cfg.seed).matrix

    t0 = time.monotonic()
    seeds, pruned = _seed_boxes(system, box0, cfg)
    shared = _Shared(seeds, cfg.max_boxes)
    shared.stats.sleeve_cells_pruned = pruned

    workers = max(1, cfg.workers)
    threads = [
        threading.Thread(
            target=_worker, args=(system, rotation, cfg, method, shared), daemon=True
        )
        for _ in range(workers)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    stats = shared.stats
    stats.incomplete = shared.incomplete
    stats.unprocessed = shared.unprocessed
    certified = sorted(shared.certified, key=NBox.sort_key)
    suspected = sorted(shared.suspected, key=NBox.sort_key)
    refined: List[RefinedRoot] = []
    if cfg.postprocess and suspected:
        refined = postprocess_suspected(system, suspected, cfg, rotation)
    stats.wall_time = time.monotonic() - t0
    return IsolationResult(certified, suspected, refined, stats)


def _seed_boxes(system: FuncSystem, box0: NBox, cfg: Config) -> Tuple[List[NBox], int]:
    if cfg.candidate_strategy == "sleeve":
        try:
            cand = candidates(system, box0, cfg.candidate_grid)
            total = cfg.candidate_grid ** max(0, system.n - 1)
            pruned = total - len({tuple(b.dims[:-1]) for b in cand})
            return cand, pruned
        except NonPolynomialError:
            warnings.warn("sleeve candidates need a polynomial system; falling back to plain")
    boxes = [box0]
    for _ in range(max(0, cfg.presplit_depth)):
        nxt: List[NBox] = []
        for b in boxes:
            nxt.extend(_split_all_dims(b))
        boxes = nxt
    return boxes, 0


def _split_all_dims(box: NBox) -> List[NBox]:
    out = [box]
    for i in range(box.n):
        nxt = []
        for b in out:
            iv = b.dims[i]
            m = iv.mid
            if iv.lo < m < iv.hi:
                nxt.append(b.replace(i, Interval(iv.lo, m)))
                nxt.append(b.replace(i, Interval(m, iv.hi)))
            else:
                nxt.append(b)
        out = nxt
    return out


def _worker(system: FuncSystem, rotation: np.ndarray, cfg: Config, method: str, shared: _Shared) -> None:
    while True:
        with shared.cond:
            while not shared.stack and shared.active > 0:
                shared.cond.wait()
            if not shared.stack:
                return
            if shared.stats.processed >= shared.budget:
                shared.incomplete = True
                shared.unprocessed += len(shared.stack)
                shared.stack.clear()
                shared.cond.notify_all()
                return
            take = min(_CHUNK, len(shared.stack), shared.budget - shared.stats.processed)
            chunk = shared.stack[-take:]
            del shared.stack[-take:]
            shared.stats.processed += len(chunk)
            shared.active += 1
        try:
            new_boxes, certified, suspected, delta = _process_chunk(
                system, rotation, cfg, method, chunk
            )
        finally:
            with shared.cond:
                shared.stack.extend(new_boxes)
                shared.certified.extend(certified)
                shared.suspected.extend(suspected)
                for k, v in delta.items():
                    setattr(shared.stats, k, getattr(shared.stats, k) + v)
                shared.active -= 1
                shared.cond.notify_all()


def _hess_index(n: int) -> np.ndarray:
    """Map (i, j, k) to the flattened k<=j Hessian tape output index."""
    idx = np.empty((n, n, n), dtype=np.intp)
    row = np.empty((n, n), dtype=np.intp)
    pos = 0
    for j in range(n):
        for k in range(j + 1):
            row[j, k] = pos
            row[k, j] = pos
            pos += 1
    per_func = pos
    for i in range(n):
        idx[i] = row + i * per_func
    return idx


_HESS_IDX_CACHE: Dict[int, np.ndarray] = {}


def _enclose_chunk(system: FuncSystem, lo: np.ndarray, hi: np.ndarray):
    """Sound value and Jacobian enclosures for a batch of boxes.

    Natural interval extension intersected with the mean-value form
    f(m) + J(B) (B - m) (and its Hessian analogue for J), which stays tight
    where term cancellation makes the natural form explode.
    """
    n = system.n
    flo, fhi = tp.eval_interval_batch(system.func_tape(), lo, hi)
    mids = 0.5 * (lo + hi)
    jmid = tp.eval_point_batch(system.jac_tape(), mids).reshape(-1, n, n)
    jnlo, jnhi = tp.eval_interval_batch(system.jac_tape(), lo, hi)
    jnlo = jnlo.reshape(-1, n, n)
    jnhi = jnhi.reshape(-1, n, n)
    jmlo, jmhi = tp.eval_interval_batch(system.jac_tape(), mids, mids.copy())
    jmlo = jmlo.reshape(-1, n, n)
    jmhi = jmhi.reshape(-1, n, n)
    hlo, hhi = tp.eval_interval_batch(system.hess_tape(), lo, hi)
    idx = _HESS_IDX_CACHE.get(n)
    if idx is None:
        idx = _HESS_IDX_CACHE.setdefault(n, _hess_index(n))
    hflo = hlo[:, idx]  # (K, n, n, n): d J_ij / dx_k
    hfhi = hhi[:, idx]
    r_lo = np.nextafter(lo - mids, -np.inf)
    r_hi = np.nextafter(hi - mids, np.inf)

    tlo, thi = tp.iv_mul_arrays(
        hflo, hfhi, r_lo[:, None, None, :], r_hi[:, None, None, :]
    )
    jclo, jchi = tp.mean_value_add(jmlo, jmhi, tlo, thi)
    jlo, jhi = tp.intersect_enclosures(jnlo, jnhi, jclo, jchi)

    fmlo, fmhi = tp.eval_interval_batch(system.func_tape(), mids, mids.copy())
    vlo, vhi = tp.iv_mul_arrays(jlo, jhi, r_lo[:, None, :], r_hi[:, None, :])
    fclo, fchi = tp.mean_value_add(fmlo, fmhi, vlo, vhi)
    flo, fhi = tp.intersect_enclosures(flo, fhi, fclo, fchi)
    return flo, fhi, jlo, jhi, jmid


def _process_chunk(
    system: FuncSystem,
    rotation: np.ndarray,
    cfg: Config,
    method: str,
    chunk: Sequence[NBox],
) -> Tuple[List[NBox], List[NBox], List[NBox], Dict[str, int]]:
    n = system.n
    K = len(chunk)
    stats: Dict[str, int] = {
        "excluded": 0, "not_invertible": 0, "sm_failed": 0,
        "unique": 0, "empty": 0, "unknown": 0, "splits": 0,
        "suspected_min_width": 0, "suspected_unknown": 0,
    }
    lo = np.array([[iv.lo for iv in b.dims] for b in chunk])
    hi = np.array([[iv.hi for iv in b.dims] for b in chunk])
    nat_lo, nat_hi = tp.eval_interval_batch(system.func_tape(), lo, hi)
    excl = ((nat_lo > 0.0) | (nat_hi < 0.0)).any(axis=1)
    survivors = np.flatnonzero(~excl)
    stats["excluded"] = int(K - survivors.size)

    new_boxes: List[NBox] = []
    certified: List[NBox] = []
    suspected: List[NBox] = []
    if survivors.size == 0:
        return new_boxes, certified, suspected, stats

    flo, fhi, jlo, jhi, jmid = _enclose_chunk(system, lo[survivors], hi[survivors])
    excl2 = ((flo > 0.0) | (fhi < 0.0)).any(axis=1)
    stats["excluded"] += int(excl2.sum())
    eps_b = cfg.resolved_eps_b()

    def fail_path(box: NBox) -> None:
        if box.width > cfg.epsilon:
            stats["splits"] += 1
            a, b = box.split()
            new_boxes.append(a)
            new_boxes.append(b)
        else:
            stats["suspected_min_width"] += 1
            suspected.append(box)

    for s, idx in enumerate(survivors):
        if excl2[s]:
            continue
        box = chunk[int(idx)]
        try:
            inv = invert_with_guard(jmid[s])
        except NotInvertibleError:
            stats["not_invertible"] += 1
            fail_path(box)
            continue
        M = rotation @ inv
        # exclusion through the preconditioned system: V(G) = V(F), and G is
        # near-linear on small boxes, so this catches what the direct
        # evaluation overestimates along the leading functions' zero curve
        vlo, vhi = _combine(M, flo[s], fhi[s])
        if ((vlo > 0.0) | (vhi < 0.0)).any():
            stats["excluded"] += 1
            continue
        glo_t, ghi_t = _combine(M, jlo[s].T, jhi[s].T)
        glo, ghi = glo_t.T, ghi_t.T
        if np.isnan(glo).any() or np.isnan(ghi).any():
            stats["sm_failed"] += 1
            fail_path(box)
            continue
        g = PrecondSystem(RestrictedSystem(system, ()), M, origin_box=box)
        if method == "mk":
            if jacobian_excludes_second_root(g, box) and miranda_certifies(g, box):
                stats["unique"] += 1
                certified.append(box)
            else:
                stats["sm_failed"] += 1
                fail_path(box)
            continue
        if not is_sm_raw(glo, ghi):
            stats["sm_failed"] += 1
            fail_path(box)
            continue
        rows_sd = rows_sign_definite(glo, ghi)
        res = existence(g, box, eps_b, rows_sd, cfg.debug)
        if res.outcome is Outcome.UNIQUE:
            stats["unique"] += 1
            certified.append(box)
        elif res.outcome is Outcome.EMPTY:
            stats["empty"] += 1
        else:
            stats["unknown"] += 1
            stats["suspected_unknown"] += 1
            suspected.append(box)
    return new_boxes, certified, suspected, stats


# -- post-processing -----------------------------------------------------------

def postprocess_suspected(
    system: FuncSystem,
    suspected: Sequence[NBox],
    cfg: Config,
    rotation: Optional[np.ndarray] = None,
) -> List[RefinedRoot]:
    """Newton-polish suspected clusters and attempt re-certification.

    Heuristic by design: roots on cluster boundaries may be missed or
    double-counted; certified results never depend on this pass.
    """
    if not suspected:
        return []
    if rotation is None:
        rotation = make_sm_rotation(system.n, cfg.rotation_scale, cfg.seed).matrix
    clusters = _cluster_boxes(suspected)
    eps = cfg.epsilon
    results: List[Tuple[Tuple[float, ...], float, int]] = []
    for cid, cluster in enumerate(clusters):
        bbox = _bounding_box(cluster)
        margin = max(b.width for b in cluster)
        inflated = bbox.inflate(margin)
        starts = np.array([b.midpoint for b in cluster])
        pts, residuals = _damped_newton_batch(system, starts)
        for pt, residual in zip(pts, residuals):
            if not np.isfinite(residual) or residual >= 1e-10:
                continue
            if not inflated.contains_point(pt):
                continue
            results.append((tuple(float(v) for v in pt), float(residual), cid))
    deduped: List[Tuple[Tuple[float, ...], float, int]] = []
    for pt, residual, cid in sorted(results):
        if any(max(abs(a - b) for a, b in zip(pt, q[0])) < 10.0 * eps for q in deduped):
            continue
        deduped.append((pt, residual, cid))
    refined = []
    for pt, residual, cid in deduped:
        refined.append(RefinedRoot(pt, residual, cid, _recertify(system, pt, cfg, rotation)))
    return refined


def _recertify(system: FuncSystem, pt: Tuple[float, ...], cfg: Config, rotation: np.ndarray) -> bool:
    eps = cfg.epsilon
    box = NBox(tuple(Interval(x - 2.0 * eps, x + 2.0 * eps) for x in pt))
    try:
        inv = invert_with_guard(system.jacobian_point(box.midpoint))
    except NotInvertibleError:
        return False
    g = PrecondSystem(RestrictedSystem(system, ()), rotation @ inv, origin_box=box)
    try:
        jlo, jhi = g.jacobian_raw(box)
    except ex.EvaluationError:
        return False
    if np.isnan(jlo).any() or np.isnan(jhi).any() or not is_sm_raw(jlo, jhi):
        return False
    res = existence(g, box, cfg.resolved_eps_b(), rows_sign_definite(jlo, jhi))
    return res.outcome is Outcome.UNIQUE


def _cluster_boxes(boxes: Sequence[NBox]) -> List[List[NBox]]:
    """Union-find on closure overlap, with a sweep over the first dimension."""
    order = sorted(range(len(boxes)), key=lambda i: boxes[i].dims[0].lo)
    parent = list(range(len(boxes)))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    active: List[int] = []
    for i in order:
        b = boxes[i]
        keep = []
        for j in active:
            if boxes[j].dims[0].hi >= b.dims[0].lo:
                keep.append(j)
                if b.closure_overlaps(boxes[j]):
                    union(i, j)
        active = keep + [i]
    groups: Dict[int, List[NBox]] = {}
    for i in range(len(boxes)):
        groups.setdefault(find(i), []).append(boxes[i])
    return [groups[r] for r in sorted(groups)]


def _bounding_box(boxes: Sequence[NBox]) -> NBox:
    dims = []
    for i in range(boxes[0].n):
        dims.append(
            Interval(min(b.dims[i].lo for b in boxes), max(b.dims[i].hi for b in boxes))
        )
    return NBox(tuple(dims))


def _damped_newton_batch(
    system: FuncSystem, starts: np.ndarray, max_steps: int = 100
) -> Tuple[np.ndarray, np.ndarray]:
    """Lockstep damped Newton over many start points (tape-evaluated).

    Returns final points and residual infinity-norms (inf where the
    iteration broke down)."""
    n = system.n
    X = starts.astype(float).copy()
    B = X.shape[0]
    with np.errstate(all="ignore"):
        F = tp.eval_point_batch(system.func_tape(), X)
        res = np.abs(F).max(axis=1)
        res[~np.isfinite(res)] = np.inf
        active = res > 1e-14
        for _ in range(max_steps):
            if not active.any():
                break
            J = tp.eval_point_batch(system.jac_tape(), X).reshape(B, n, n)
            step = np.full_like(X, np.nan)
            ok = active & np.isfinite(J).all(axis=(1, 2)) & np.isfinite(F).all(axis=1)
            idx = np.flatnonzero(ok)
            if idx.size:
                try:
                    step[idx] = np.linalg.solve(J[idx], F[idx][..., None])[..., 0]
                except np.linalg.LinAlgError:
                    for i in idx:
                        try:
                            step[i] = np.linalg.solve(J[i], F[i])
                        except np.linalg.LinAlgError:
                            pass
            solvable = np.isfinite(step).all(axis=1)
            active &= solvable
            if not active.any():
                break
            lam = np.ones(B)
            improved = np.zeros(B, dtype=bool)
            X_next = X.copy()
            F_next = F.copy()
            res_next = res.copy()
            for _ in range(30):
                trial_mask = active & ~improved
                if not trial_mask.any():
                    break
                X_try = X - lam[:, None] * step
                F_try = tp.eval_point_batch(system.func_tape(), X_try)
                res_try = np.abs(F_try).max(axis=1)
                res_try[~np.isfinite(res_try)] = np.inf
                good = trial_mask & ((res_try < res) | (res_try < 1e-14))
                X_next[good] = X_try[good]
                F_next[good] = F_try[good]
                res_next[good] = res_try[good]
                improved |= good
                lam = np.where(trial_mask & ~improved, lam * 0.5, lam)
            X, F, res = X_next, F_next, res_next
            active &= improved
            active &= res > 1e-14
    return X, res


# -- coordinate transforms -------------------------------------------------------

def invert_coordinates(system: FuncSystem, flags: Sequence[bool]) -> FuncSystem:
    """Substitute x_i -> 1/x_i on flagged dimensions.

    Polynomials are multiplied by the minimal flagged-variable powers that
    clear denominators, so roots outside [-1,1] in flagged dimensions map to
    roots of the image inside [-1,1] minus 0.  Non-polynomial systems come
    back in rational form with a warning (exclusion stays sound where the
    evaluation is defined).
    """
    if len(flags) != system.n:
        raise ValueError("one flag per dimension required")
    flagged = [i for i, f in enumerate(flags) if f]
    if not flagged:
        return system
    try:
        all_terms = [poly_terms(f, system.n) for f in system.exprs]
    except NonPolynomialError:
        warnings.warn("non-polynomial system: returning rational form without clearing")
        mapping = {i: ex.div(ex.Const(1.0), ex.Var(i)) for i in flagged}
        return FuncSystem(system.names, [ex.substitute_vars(f, mapping) for f in system.exprs])
    new_exprs = []
    for terms in all_terms:
        degs = {i: max((m[i] for m in terms), default=0) for i in flagged}
        new_terms: Dict[Tuple[int, ...], float] = {}
        for m, c in terms.items():
            nm = tuple(
                degs[i] - e if i in degs else e for i, e in enumerate(m)
            )
            new_terms[nm] = new_terms.get(nm, 0.0) + c
        new_exprs.append(terms_to_expr(new_terms))
    return FuncSystem(system.names, new_exprs)


def scale_coordinates(system: FuncSystem, factors: Sequence[float]) -> FuncSystem:
    """Substitute x_i -> factor_i * x_i (the rescaling compactification)."""
    if len(factors) != system.n:
        raise ValueError("one factor per dimension required")
    mapping = {
        i: ex.mul(ex.Const(float(c)), ex.Var(i)) for i, c in enumerate(factors) if c != 1.0
    }
    return FuncSystem(system.names, [ex.substitute_vars(f, mapping) for f in system.exprs])
