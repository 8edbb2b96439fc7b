"""Traversing flows on compact domains with boundary.

The package traces flows that cross a compact domain, stratifies the
boundary by contact multiplicity, builds the quotient space of
trajectories, and reconstructs the flow from boundary data alone.
Scenes are JSON descriptions of the cut function z, the field v, and
the Lyapunov function f; the numeric core runs on a compiled kernel
with a pure Python fallback.
"""

from . import _backend
from .errors import (DegenerateContact, EscapedBbox, EvalDomainError,
                     InconsistentQuotient, NonTraversing, OrderViolation,
                     ParseError, SceneInvalid, TravflowError, UnmatchedClass,
                     UnsupportedMode, CurveExtractionFailed)
from .expr import differentiate, evaluate, parse, simplify, to_string
from .scene import Scene, ToleranceSet, ValidationReport
from .levelset import extract_boundary_curves
from .strata import (BoundaryPoint, classify, in_plus_stratum, multiplicity_at,
                     stratum_sample_3d, tangency_locus_2d)
from .tracer import (Divisor, OmegaType, TrajectoryRecord, boundary_seeds,
                     check_parity, gamma_multiplicities, norms, omega_of,
                     parity_violations, seed_grid, stability_margin, trace,
                     trace_many)
from .tspace import (QuotientComplex, TrajectoryClass, betti, build_complex_2d,
                     fiber_statistics, filtration, gamma_map, sample_complex_3d)
from .holo import (BoundaryData, Reconstruction, alpha_embed,
                   extract_boundary_data, reconstruct, verify_reconstruction)
from .localmodel import build_polynomial, model_scene, roundtrip

__version__ = "0.1.0"


def backend_name():
    """Name of the active numeric kernel, "compiled" or "python"."""
    return _backend.name


def set_backend(which):
    """Switch the numeric kernel at runtime; mainly for tests."""
    _backend.set_backend(which)


__all__ = [
    "BoundaryData", "BoundaryPoint", "DegenerateContact", "Divisor",
    "EscapedBbox", "EvalDomainError", "InconsistentQuotient", "NonTraversing",
    "OmegaType", "OrderViolation", "ParseError", "QuotientComplex",
    "Reconstruction", "Scene", "SceneInvalid", "ToleranceSet",
    "TrajectoryClass", "TrajectoryRecord", "TravflowError", "UnmatchedClass",
    "UnsupportedMode", "CurveExtractionFailed", "ValidationReport",
    "alpha_embed", "backend_name", "betti", "boundary_seeds",
    "build_complex_2d", "build_polynomial", "check_parity", "classify",
    "differentiate", "evaluate", "extract_boundary_curves",
    "extract_boundary_data", "fiber_statistics", "filtration", "gamma_map",
    "gamma_multiplicities", "in_plus_stratum", "model_scene",
    "multiplicity_at", "norms", "omega_of", "parity_violations", "parse",
    "reconstruct", "roundtrip", "sample_complex_3d", "seed_grid",
    "set_backend", "simplify", "stability_margin", "stratum_sample_3d",
    "tangency_locus_2d", "to_string", "trace", "trace_many",
    "verify_reconstruction",
]
