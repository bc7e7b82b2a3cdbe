"""Exception hierarchy. Input-class errors map to CLI exit code 2, everything else to 1."""


class SpimError(Exception):
    """Root of all simulator errors."""


class InputError(SpimError, ValueError):
    """Bad caller input: the request cannot be served as stated."""


class InvalidInstance(InputError):
    """Empty, too short, or non-positive number-partitioning instance."""


class DimensionError(InputError):
    """Array or instance sizes do not agree."""


class ScheduleError(InputError):
    """Adiabatic step index outside [0, K]."""


class GeometryError(InputError):
    """SLM / lattice / readout geometry is inconsistent."""


class InvalidArgument(InputError):
    """A scalar argument is outside its allowed range."""


class InitError(InputError):
    """The supplied initial spin configuration violates the balanced-start rule."""


class TooLarge(InputError):
    """Instance exceeds the size an exact oracle will enumerate."""


class CalibrationError(InputError):
    """Exposure cannot be calibrated against the reference image."""


class NotSupported(SpimError, NotImplementedError):
    """Requested variant exists in the model but is not instantiated."""
