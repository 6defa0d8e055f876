"""Command-line surface: isolate | generate | sweep | compare-mk.

Exit codes: 0 complete run, 1 input error, 2 max-boxes truncation.
Reports serialize to a stable JSON schema (see REPORT_SCHEMA); certified
and suspected boxes are emitted in canonical order (lexicographic by lower
endpoints) with shortest round-trippable float formatting.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .generators import FamilyError, generate_payload
from .intervals import NBox
from .isolator import Config, IsolationResult, isolate
from .systems import FuncSystem, parse_system

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["version", "input_digest", "config", "result", "timings"],
    "properties": {
        "version": {"type": "string"},
        "input_digest": {"type": "string"},
        "config": {"type": "object"},
        "timings": {
            "type": "object",
            "properties": {
                "parse": {"type": "number"},
                "isolate": {"type": "number"},
                "total": {"type": "number"},
            },
        },
        "result": {
            "type": "object",
            "required": ["certified", "suspected", "refined", "stats"],
            "properties": {
                "certified": {"$ref": "#/$defs/boxes"},
                "suspected": {"$ref": "#/$defs/boxes"},
                "refined": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["point", "residual", "certified", "cluster"],
                        "properties": {
                            "point": {"type": "array", "items": {"type": "number"}},
                            "residual": {"type": "number"},
                            "certified": {"type": "boolean"},
                            "cluster": {"type": "integer"},
                        },
                    },
                },
                "stats": {"type": "object"},
            },
        },
    },
    "$defs": {
        "boxes": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {
                    "type": "array",
                    "minItems": 2,
                    "maxItems": 2,
                    "items": {"type": "number"},
                },
            },
        }
    },
}


@dataclass
class RunReport:
    version: str
    input_digest: str
    config: dict
    result: dict
    timings: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _box_payload(boxes: Sequence[NBox]) -> List[List[List[float]]]:
    return [[[iv.lo, iv.hi] for iv in b.dims] for b in boxes]


def result_payload(result: IsolationResult) -> dict:
    return {
        "certified": _box_payload(result.certified),
        "suspected": _box_payload(result.suspected),
        "refined": [
            {
                "point": list(r.point),
                "residual": r.residual,
                "certified": r.certified,
                "cluster": r.cluster,
            }
            for r in result.refined
        ],
        "stats": result.stats.as_dict(),
    }


def _config_payload(cfg: Config) -> dict:
    out = asdict(cfg)
    if out.get("rotation_matrix") is not None:
        out["rotation_matrix"] = np.asarray(out["rotation_matrix"]).tolist()
    return out


def make_report(cfg: Config, result: IsolationResult, digest: str, timings: dict) -> RunReport:
    return RunReport(
        version=__version__,
        input_digest=digest,
        config=_config_payload(cfg),
        result=result_payload(result),
        timings=timings,
    )


# -- argument plumbing ---------------------------------------------------------

class InputError(Exception):
    pass


def _read_system(path: str, box_flag: Optional[str]):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    digest = hashlib.sha256(raw).hexdigest()
    try:
        payload = json.loads(raw.decode("utf-8"))
        system, box, extras = parse_system(payload)
    except (ValueError, KeyError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    if box_flag is not None:
        try:
            bounds = json.loads(box_flag)
            box = NBox.from_bounds(bounds)
        except (ValueError, TypeError) as exc:
            raise InputError(f"bad --box: {exc}") from exc
        if box.n != system.n:
            raise InputError(f"--box has {box.n} dimensions for {system.n} variables")
    if box is None:
        raise InputError(f"{path}: no box given (file 'box' field or --box flag)")
    return system, box, extras, digest


def _config_from_args(args, extras: dict) -> Config:
    epsilon = args.precision if args.precision is not None else extras.get("precision", 1e-6)
    eps_b = args.epsilon_b if args.epsilon_b is not None else extras.get("epsilon_b")
    return Config(
        epsilon=float(epsilon),
        epsilon_b=None if eps_b is None else float(eps_b),
        rotation_scale=args.rotation_scale,
        seed=args.seed,
        workers=args.workers,
        max_boxes=args.max_boxes,
        candidate_strategy=args.candidates,
        postprocess=not args.no_postprocess,
    )


def _apply_inversion(system: FuncSystem, box: NBox, invert_dims: Optional[str]):
    if not invert_dims:
        return system, box
    from .isolator import invert_coordinates
    from .intervals import Interval

    try:
        idxs = [int(t) for t in invert_dims.split(",") if t.strip() != ""]
    except ValueError as exc:
        raise InputError(f"bad --invert-dims: {exc}") from exc
    flags = [False] * system.n
    for i in idxs:
        if not 1 <= i <= system.n:
            raise InputError(f"--invert-dims index {i} out of range 1..{system.n}")
        flags[i - 1] = True
    image = invert_coordinates(system, flags)
    dims = []
    for i, iv in enumerate(box.dims):
        dims.append(Interval(-1.0, 1.0) if flags[i] else iv)
    return image, NBox(tuple(dims))


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--box", help="JSON bounds [[lo,hi],...] overriding the file box")
    p.add_argument("--precision", type=float, help="termination width epsilon")
    p.add_argument("--epsilon-b", dest="epsilon_b", type=float, help="face refinement width")
    p.add_argument("--rotation-scale", type=int, default=None, help="diagonal scale N of the rotation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-boxes", type=int, default=5_000_000)
    p.add_argument("--candidates", choices=("plain", "sleeve"), default="plain")
    p.add_argument("--no-postprocess", action="store_true")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--invert-dims", help="comma list of 1-based dims to map x -> 1/x")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="boxroots",
        description="Certified real-root isolation for square nonlinear systems in boxes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_iso = sub.add_parser("isolate", help="isolate all real zeros in the box")
    p_iso.add_argument("file", help="system file (JSON)")
    _add_common_flags(p_iso)

    p_gen = sub.add_parser("generate", help="write a seeded random benchmark system")
    p_gen.add_argument("family", help="NiDj, NiDjE, or multiNiDj (e.g. N2D5)")
    p_gen.add_argument("--terms", type=int, default=10)
    p_gen.add_argument("--coeff", type=int, default=10)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--box", help="JSON bounds [[lo,hi],...] recorded in the file")
    p_gen.add_argument("--output", "-o", help="output path (default stdout)")

    p_sweep = sub.add_parser("sweep", help="repeat isolation over several precisions")
    p_sweep.add_argument("file")
    p_sweep.add_argument("--precisions", required=True, help="comma list, e.g. 1e-2,1e-4")
    _add_common_flags(p_sweep)

    p_cmp = sub.add_parser("compare-mk", help="S-M certification vs the Miranda (MK) test")
    p_cmp.add_argument("file")
    _add_common_flags(p_cmp)

    args = parser.parse_args(argv)
    try:
        if args.command == "isolate":
            return _cmd_isolate(args)
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_compare_mk(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _cmd_isolate(args) -> int:
    t_start = time.monotonic()
    system, box, extras, digest = _read_system(args.file, args.box)
    system, box = _apply_inversion(system, box, args.invert_dims)
    cfg = _config_from_args(args, extras)
    t_parsed = time.monotonic()
    try:
        result = isolate(system, box, cfg)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    t_done = time.monotonic()
    report = make_report(
        cfg,
        result,
        digest,
        {
            "parse": t_parsed - t_start,
            "isolate": t_done - t_parsed,
            "total": t_done - t_start,
        },
    )
    if args.format == "json":
        print(report.to_json())
    else:
        print(f"certified: {len(result.certified)}")
        for b in result.certified:
            print(f"  {b}")
        print(f"suspected: {len(result.suspected)}")
        print(f"refined: {len(result.refined)}")
        for r in result.refined:
            mark = "certified" if r.certified else "uncertified"
            pt = ", ".join(repr(v) for v in r.point)
            print(f"  ({pt}) residual={r.residual:.2e} [{mark}]")
        print(f"boxes processed: {result.stats.processed}")
    return 2 if result.stats.incomplete else 0


def _cmd_generate(args) -> int:
    box = None
    if args.box is not None:
        try:
            box = json.loads(args.box)
        except ValueError as exc:
            raise InputError(f"bad --box: {exc}") from exc
    try:
        payload = generate_payload(args.family, args.terms, args.coeff, args.seed, box)
    except (FamilyError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    text = json.dumps(payload, indent=2)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_sweep(args) -> int:
    system, box, extras, _ = _read_system(args.file, args.box)
    system, box = _apply_inversion(system, box, args.invert_dims)
    try:
        precisions = [float(t) for t in args.precisions.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"bad --precisions: {exc}") from exc
    if not precisions:
        raise InputError("--precisions is empty")
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["epsilon", "certified", "suspected", "refined", "time"])
    incomplete = False
    for eps in precisions:
        cfg = _config_from_args(args, extras)
        cfg.epsilon = eps
        cfg.epsilon_b = None if args.epsilon_b is None else args.epsilon_b
        try:
            result = isolate(system, box, cfg)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        incomplete = incomplete or result.stats.incomplete
        writer.writerow(
            [
                repr(eps),
                len(result.certified),
                len(result.suspected),
                len(result.refined),
                f"{result.stats.wall_time:.3f}",
            ]
        )
    sys.stdout.write(out.getvalue())
    return 2 if incomplete else 0


def _cmd_compare_mk(args) -> int:
    system, box, extras, _ = _read_system(args.file, args.box)
    system, box = _apply_inversion(system, box, args.invert_dims)
    rows = []
    incomplete = False
    for method in ("sm", "mk"):
        cfg = _config_from_args(args, extras)
        try:
            result = isolate(system, box, cfg, method=method)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        incomplete = incomplete or result.stats.incomplete
        rows.append((method, len(result.certified), len(result.suspected)))
    if args.format == "json":
        print(json.dumps([
            {"method": m, "certified": c, "suspected": s} for m, c, s in rows
        ], indent=2))
    else:
        print("method,certified,suspected")
        for m, c, s in rows:
            print(f"{m},{c},{s}")
    return 2 if incomplete else 0


if __name__ == "__main__":
    sys.exit(main())
