"""Exception hierarchy shared by every subpackage.

The CLI maps these onto exit codes: configuration problems exit with 2,
numerical failures with 3 and file/format problems with 4.
"""


class SpfError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SpfError, ValueError):
    """Invalid configuration or argument combination."""


class DimensionError(SpfError, ValueError):
    """Array shapes do not agree with what an operation expects."""


class NumericError(SpfError, ArithmeticError):
    """A computation produced non-finite values or failed to factorize."""


class StabilityError(NumericError):
    """Explicit time step violates the solver's CFL bound."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class DryingError(NumericError):
    """Water depth reached zero or below."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class DivergenceError(NumericError):
    """Training loss became non-finite."""

    def __init__(self, message, epoch=None, index=None, phase=None):
        where = []
        if phase is not None:
            where.append(f"phase {phase}")
        if epoch is not None:
            where.append(f"epoch {epoch}")
        if index is not None:
            where.append(f"index {index}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.epoch = epoch
        self.index = index
        self.phase = phase


class RankError(ConfigError):
    """Requested latent dimension exceeds the available snapshot rank."""


class ComparabilityError(SpfError, ValueError):
    """Runs being compared were not produced under matching conditions."""


class FormatError(SpfError, IOError):
    """Base class for SPFD container problems."""


class BadMagicError(FormatError):
    pass


class VersionError(FormatError):
    pass


class CrcError(FormatError):
    pass


class TruncatedError(FormatError):
    pass
