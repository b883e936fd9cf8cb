"""Transcription of the co-design problem into a sparse nonlinear program."""

from .build import (
    TranscriptionOptions,
    build_nlp,
    clearance_corners,
    com_height,
    corner_positions,
    initialize_guess,
    interpolate_keyframes,
    objective_breakdown,
)
from .layout import LAMBDA_NAMES, N_SLACK, DecisionLayout
from .motors import MotorLibrary, MotorSpec, motor_bound_curves, select_motor
from .problem import FAMILIES, ConstraintBlock, NlpProblem
from .task import Keyframe, ObjectiveSpec, TaskConstraint, TaskSpec

__all__ = [
    "FAMILIES",
    "LAMBDA_NAMES",
    "N_SLACK",
    "ConstraintBlock",
    "DecisionLayout",
    "Keyframe",
    "MotorLibrary",
    "MotorSpec",
    "NlpProblem",
    "ObjectiveSpec",
    "TaskConstraint",
    "TaskSpec",
    "TranscriptionOptions",
    "build_nlp",
    "clearance_corners",
    "com_height",
    "corner_positions",
    "initialize_guess",
    "interpolate_keyframes",
    "motor_bound_curves",
    "objective_breakdown",
    "select_motor",
]
