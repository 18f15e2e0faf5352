"""Exception types shared across the package."""


class SafebanditError(Exception):
    """Base class for all package errors."""


class InvalidParameter(SafebanditError, ValueError):
    """A test or environment parameter violates its admissible range."""


class UpdateAfterDiscard(SafebanditError, RuntimeError):
    """An arm that was already discarded received another observation."""


class IndexOutOfRange(SafebanditError, IndexError):
    """Arm index outside the environment."""


class EmptySurvivingSet(SafebanditError, RuntimeError):
    """Every arm has been discarded; no further selection is possible."""


class PolicyViolation(SafebanditError, RuntimeError):
    """An inner policy selected an arm that is not in the surviving set."""


class NoSafeArms(SafebanditError, ValueError):
    """The safety ratio is undefined because no arm meets the safe cut."""


class ConfigError(SafebanditError, ValueError):
    """An experiment specification or CLI invocation is invalid."""


class IoError(SafebanditError, OSError):
    """Reading or writing result files failed."""


class SchemaError(SafebanditError, ValueError):
    """An input file does not match the documented column schema."""
