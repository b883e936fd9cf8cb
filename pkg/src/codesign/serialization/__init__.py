"""JSON input schemas and result export."""

from .results import (
    dumps_result,
    export_result,
    load_result,
    result_document,
    strip_nondeterministic,
    trajectory_csv,
)
from .specs import (
    UNITS,
    motor_library_to_json,
    normalize_unit,
    parse_motor_library,
    parse_robot_spec,
    parse_task_spec,
    read_json,
    robot_to_json,
)


def load_robot(path):
    return parse_robot_spec(read_json(path))


def load_task(path):
    return parse_task_spec(read_json(path))


def load_motor_library(path):
    return parse_motor_library(read_json(path))


__all__ = [
    "UNITS",
    "dumps_result",
    "export_result",
    "load_motor_library",
    "load_result",
    "load_robot",
    "load_task",
    "motor_library_to_json",
    "normalize_unit",
    "parse_motor_library",
    "parse_robot_spec",
    "parse_task_spec",
    "read_json",
    "result_document",
    "robot_to_json",
    "strip_nondeterministic",
    "trajectory_csv",
]
