class DimensionError(ValueError):
    """Operand shapes or qubit counts do not fit together."""


class InvariantViolation(ArithmeticError):
    """A numerical invariant (Hermiticity, trace, relevance normalization, ...) failed."""


class CalibrationError(ValueError):
    """The readout calibration cannot isolate the requested Pauli term."""
