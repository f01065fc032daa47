"""Exception hierarchy for the contact-forge kernel.

Every failure mode that a caller is expected to handle gets its own class;
plain ``StructuralError`` covers malformed inputs (mismatched variable sets,
bad dimensions) that indicate a programming error rather than a mathematical
obstruction.  Obstruction-type errors carry a witness where one exists.
"""


class ContactForgeError(Exception):
    """Base class for all kernel errors."""


class StructuralError(ContactForgeError):
    """Malformed input: incompatible variable sets, dimensions, or windows."""


class NotAUnit(ContactForgeError):
    """Attempted to invert a series whose leading part vanishes on the domain."""


class QuadratureFailure(ContactForgeError):
    """Adaptive quadrature failed to converge within the node budget."""


class NotContact(ContactForgeError):
    """A 1-form failed the nondegeneracy test alpha ^ (d alpha)^n != 0."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class RankDeficient(ContactForgeError):
    """A function matrix dropped rank at a point of the domain."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ExactModeUnavailable(ContactForgeError):
    """Exact frame completion cannot certify a unit pivot; numeric mode may."""


class FlowEscape(ContactForgeError):
    """A base flow left the surface model's domain."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class PeriodObstruction(ContactForgeError):
    """A 1-form has nonvanishing periods, blocking a single-valued primitive."""

    def __init__(self, message, periods=None):
        super().__init__(message)
        self.periods = periods


class DegenerateDilation(ContactForgeError):
    """Dilation weight t = 0 is not invertible."""


class NotIsotropic(ContactForgeError):
    """The zero section (or a subspace) is not isotropic for the given form."""


class ContactViolation(ContactForgeError):
    """A rank certificate required by the contact condition failed."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class FlowDiverged(ContactForgeError):
    """Jet coefficients of a Moser flow blew up during time integration."""


class HypothesisViolation(ContactForgeError):
    """Input pair (alpha, beta) fails the first-order agreement hypothesis."""


class ControlSynthesisFailure(ContactForgeError):
    """Control-function synthesis could not satisfy a stated condition."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class PeriodSolveFailure(ContactForgeError):
    """Newton iteration on the period-vanishing equation did not converge."""


class SubmersivityFailure(ContactForgeError):
    """Spray differential at the marked point is singular within tolerance."""


class SceneError(ContactForgeError):
    """Scene file failed to parse or validate."""
