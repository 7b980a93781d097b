"""Exception types shared across the package."""


class BfdcqoError(Exception):
    """Base class for all package errors."""


class DimensionError(BfdcqoError, ValueError):
    """A configuration or operand does not match the problem size."""


class CapacityError(BfdcqoError):
    """A problem exceeds the exhaustive-enumeration or statevector cap."""


class InvalidInputError(BfdcqoError, ValueError):
    """Malformed instance data (sequence, formula, manifest...)."""


class SingularMixerError(BfdcqoError, ValueError):
    """A transverse field of zero leaves the biased mixer ground state undefined."""
