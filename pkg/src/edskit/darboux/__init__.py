"""Darboux integrability, projections, tangential algebras and reciprocal frames."""

from .algebra import (Fingerprint, JacobiViolation, LieAlgebraPresentation, Normalized, NotClosed,
                      NotImplementedForType, SpanDeficiency, SymmetryReport,
                      coefficients_depend_only_on_base1, derived_tangential_frame, fingerprint,
                      fingerprint_constants, normalize_structure, presentation_from_frame,
                      structure_constants, system_symmetries, verify_tangential_symmetry)
from .projection import (DarbouxProjection, DarbouxReport, InvariantSet, LiftDegeneracy, LiftedFrame,
                         TransversalityError, build_projection, check_darboux, coordinate_base_frames,
                         lift_frame)
from .reciprocal import (GridFrame, NotTransitive, ReciprocalError, ReciprocalReport, check_reciprocal,
                         evaluation_map, reciprocal_frame)

__all__ = [
    "Fingerprint", "JacobiViolation", "LieAlgebraPresentation", "Normalized", "NotClosed",
    "NotImplementedForType", "SpanDeficiency", "SymmetryReport", "coefficients_depend_only_on_base1",
    "derived_tangential_frame", "fingerprint", "fingerprint_constants", "normalize_structure",
    "presentation_from_frame", "structure_constants", "system_symmetries", "verify_tangential_symmetry",
    "DarbouxProjection", "DarbouxReport", "InvariantSet", "LiftDegeneracy", "LiftedFrame",
    "TransversalityError", "build_projection", "check_darboux", "coordinate_base_frames", "lift_frame",
    "GridFrame", "NotTransitive", "ReciprocalError", "ReciprocalReport", "check_reciprocal",
    "evaluation_map", "reciprocal_frame",
]
