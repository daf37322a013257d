"""Exception hierarchy shared by all modules."""


class NSFCError(Exception):
    """Base class for every error raised by the package."""


class InvalidParameter(NSFCError, ValueError):
    """A physical or numerical parameter violates its admissible range."""


class NonPhysicalState(NSFCError, ValueError):
    """A conserved or primitive state lies outside the admissible set.

    ``cell`` holds the index of the first offending entry (``None`` for
    scalar inputs).
    """

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class ContactOutOfRegime(NSFCError, ValueError):
    """The requested contact discontinuity leaves the warm (ideal-gas) regime."""


class UnresolvableKernel(NSFCError, ValueError):
    """A mollifier radius is too small for the grid or too large for the torus."""


class NumericalBlowup(NSFCError, ArithmeticError):
    """A non-finite value appeared during time stepping."""

    def __init__(self, message, step=None, record=None):
        super().__init__(message)
        self.step = step
        self.record = record


class VacuumApproach(NSFCError, ArithmeticError):
    """Density fell below the configured positivity floor."""

    def __init__(self, message, step=None, record=None):
        super().__init__(message)
        self.step = step
        self.record = record


class FrameMismatch(NSFCError, ValueError):
    """Run frames and shift frames do not refer to the same times or grid."""


class ConfigError(NSFCError, ValueError):
    """Configuration file could not be read or validated.

    ``line`` is the 1-based line number when known.
    """

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc += ": "
        super().__init__(loc + message)
        self.path = path
        self.line = line
