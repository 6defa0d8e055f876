"""boxroots: certified real-root isolation for square nonlinear systems.

The pipeline subdivides a box, excludes root-free regions by interval
evaluation, preconditions the system toward a strong-monotone shape, and
certifies existence and uniqueness through a recursive face-restriction
test.  Certified boxes each contain exactly one simple zero; suspected
boxes (multiple or boundary zeros) get a heuristic Newton post-pass.
"""

__version__ = "0.1.0"

from .existence import ExistenceResult, FaceIndex, Outcome, existence, refine_face_root, vertex_sign
from .expressions import EvaluationError, ParseError
from .generators import generate_payload, generate_system
from .intervals import (
    Interval,
    IntervalDomainError,
    IntervalMatrix,
    NBox,
    Sign,
    iv_det,
    iv_sign,
    matched,
    split_box,
)
from .isolator import (
    Config,
    IsolationResult,
    RefinedRoot,
    candidates,
    exclusion,
    invert_coordinates,
    isolate,
    postprocess_suspected,
    scale_coordinates,
)
from .miranda import miranda_certifies
from .monotone import (
    PrecondSystem,
    SMRotation,
    is_om_matrix,
    is_sm_matrix,
    is_sm_system,
    make_sm_rotation,
    precondition,
)
from .systems import (
    FuncSystem,
    NotInvertibleError,
    RestrictedSystem,
    invert_midpoint_jacobian,
    parse_system,
    parse_system_json,
    system_to_json,
)

__all__ = [
    "__version__",
    "Config",
    "EvaluationError",
    "ExistenceResult",
    "FaceIndex",
    "FuncSystem",
    "Interval",
    "IntervalDomainError",
    "IntervalMatrix",
    "IsolationResult",
    "NBox",
    "NotInvertibleError",
    "Outcome",
    "ParseError",
    "PrecondSystem",
    "RefinedRoot",
    "RestrictedSystem",
    "SMRotation",
    "Sign",
    "candidates",
    "exclusion",
    "existence",
    "generate_payload",
    "generate_system",
    "invert_coordinates",
    "invert_midpoint_jacobian",
    "is_om_matrix",
    "is_sm_matrix",
    "is_sm_system",
    "isolate",
    "iv_det",
    "iv_sign",
    "make_sm_rotation",
    "matched",
    "miranda_certifies",
    "parse_system",
    "parse_system_json",
    "postprocess_suspected",
    "precondition",
    "refine_face_root",
    "scale_coordinates",
    "split_box",
    "system_to_json",
    "vertex_sign",
]
