"""Joint optimization of robot design parameters, motor choice and motion."""

__version__ = "0.1.0"
