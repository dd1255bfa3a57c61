"""Exception hierarchy.

Every error raised on purpose by this package derives from ProtomixError so
callers (and the CLI) can distinguish usage problems from numeric failures.
"""


class ProtomixError(Exception):
    """Base class for all protomix errors."""


class ConfigError(ProtomixError):
    """Invalid configuration value or unknown config key."""


class ContractError(ProtomixError):
    """A documented precondition was violated by the caller."""


class ShapeError(ContractError):
    """Operands with incompatible shapes were combined."""


class ManifestError(ProtomixError):
    """A dataset manifest could not be parsed."""


class FormatError(ProtomixError):
    """An input file is not in a supported format."""


class NumericError(ProtomixError):
    """A numeric failure: non-finite values, zero norms, unnormalizable input."""
