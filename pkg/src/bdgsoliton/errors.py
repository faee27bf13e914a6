"""Exception hierarchy.

Input errors map to CLI exit status 2, numeric errors to exit status 3.
"""


class BdgSolitonError(Exception):
    """Base class; ``code`` is the machine-readable identifier."""

    exit_status = 2

    @property
    def code(self) -> str:
        return type(self).__name__


class InputError(BdgSolitonError):
    exit_status = 2


class NumericError(BdgSolitonError):
    exit_status = 3


# scattering data validation
class ValidationError(InputError):
    pass


class NonUnitaryBackground(ValidationError):
    pass


class DegeneracyOverflow(ValidationError):
    pass


class NonOrthogonalDegenerate(ValidationError):
    pass


class BadAngle(ValidationError):
    pass


class NonUnitVector(ValidationError):
    pass


class SymmetryViolation(ValidationError):
    pass


class UnpairedAntisymmetricSoliton(ValidationError):
    pass


class SymmetricRealityViolation(ValidationError):
    pass


# argument / grid errors
class ZeroArgument(InputError):
    pass


class NearBandEdge(InputError):
    pass


class GridTooCoarse(InputError):
    pass


class SplitOutOfRange(InputError):
    pass


class ConfigParseError(InputError):
    pass


# numerical failures
class IllConditionedGram(NumericError):
    pass


class TruncationInadequate(NumericError):
    pass


class QuadratureTailTooLarge(NumericError):
    pass


class SingularSubmatrix(NumericError):
    pass
