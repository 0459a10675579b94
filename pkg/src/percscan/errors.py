"""Exception hierarchy. Each class maps to a distinct CLI exit code."""


class PercScanError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(PercScanError, ValueError):
    """An argument is out of its admissible range."""


class DegenerateContrast(PercScanError):
    """The background estimate is not below the object estimate."""


class ConfigError(PercScanError, ValueError):
    """An experiment or scene configuration violates a model assumption."""


class PgmError(PercScanError):
    """Base class for PGM decoding failures."""


class BadMagic(PgmError):
    pass


class TruncatedPayload(PgmError):
    pass


class SampleOutOfRange(PgmError):
    pass


class MalformedHeader(PgmError):
    pass
