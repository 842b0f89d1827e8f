"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes, so every raise site picks the most
specific class available.
"""


class LFamiliesError(Exception):
    """Base class for errors raised by this package."""


class InputError(LFamiliesError, ValueError):
    """Invalid arguments: out-of-domain angles, bad parity, empty inputs."""


class SingularCurveError(InputError):
    """The Weierstrass pair has zero discriminant."""


class ConfigError(InputError):
    """Malformed experiment configuration."""


class UnsupportedError(LFamiliesError):
    """A valid input that this implementation does not handle."""


class NumericalCheckError(LFamiliesError):
    """A numerical self-consistency check failed."""


class MissingZerosError(NumericalCheckError):
    """Sign-change zero count disagrees with the argument-principle count."""

    def __init__(self, message, found=None, expected=None):
        super().__init__(message)
        self.found = found
        self.expected = expected


class UndeterminedSignError(NumericalCheckError):
    """Neither sign of the functional equation is clearly preferred."""


class NeedsMoreCoefficientsError(LFamiliesError):
    """The coefficient table is too short for the requested evaluation."""

    def __init__(self, required):
        super().__init__(f"coefficient table too short: need a_n up to n={required}")
        self.required = int(required)
