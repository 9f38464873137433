"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, file/format problems with 3, numeric failures with 4.
"""


class MhuiError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MhuiError):
    """Invalid, unknown, or inconsistent configuration."""


class FormatError(MhuiError):
    """A file on disk does not conform to its declared format."""


class BadMagicError(FormatError):
    """File starts with the wrong magic marker."""


class UnsupportedVersionError(FormatError):
    """File declares a format version this build cannot read."""


class TruncatedError(FormatError):
    """File ends before all declared content was read."""


class ShapeError(FormatError):
    """Declared shapes or counts are internally inconsistent."""


class NumericError(MhuiError):
    """A numeric procedure failed (non-finite values, generation failure)."""
