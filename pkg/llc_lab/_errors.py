"""
Exception hierarchy. Everything is a ValueError so callers that only care about
"bad input" can catch that; the subclasses let the CLI and tests tell cases apart.
"""


class LabError(ValueError):
    """Root of every error raised by llc_lab."""


class InvalidSpecError(LabError):
    """A pattern, geometry, grouping or policy parameter is out of range."""


class ConfigurationError(LabError):
    """Run configuration is inconsistent (unknown policy, conflicting hint sources...)."""


class TraceMismatchError(LabError):
    """Reports being compared were not produced from the same trace and geometry."""


# ---------------------------------------------------------------------------
# Binary / text file formats
# ---------------------------------------------------------------------------

class FormatError(LabError):
    """A trace, CSR or remap file does not follow its on-disk layout."""


class BadMagicError(FormatError):
    pass


class VersionMismatchError(FormatError):
    pass


class TruncatedDataError(FormatError):
    pass


class GraphFormatError(FormatError):
    """Edge-list text with non-integer tokens, negative IDs or overflowing IDs."""


class InfeasibleDegreeSequence(LabError):
    pass
