"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    pass


class CalibrationInvalid(ValueError):
    """Raised when a phase/voltage calibration table cannot be used."""


class ConfigInvalid(ValueError):
    """Raised for unparseable or inconsistent scenario/geometry files."""


class DegenerateGeometry(ArithmeticError):
    """Raised when two propagation endpoints coincide (zero path length)."""
