"""Exception hierarchy.

`SchemeParseError` maps to exit code 2 in the CLI, every other
`TilesplitError` maps to exit code 1.
"""


class TilesplitError(Exception):
    """Base class for domain errors."""


class SchemeParseError(TilesplitError):
    """Malformed scheme document (bad JSON, unknown field, bad reference)."""


class InvalidScheme(TilesplitError):
    """A constant of substitution falls outside (0, 1) or a rule is inconsistent."""


class NotStronglyConnected(TilesplitError):
    pass


class NotIrreducible(TilesplitError):
    pass


class NoConvergence(TilesplitError):
    pass


class SingularBeyondRankOne(TilesplitError):
    pass


class NotFixedScale(TilesplitError):
    pass


class NotPrimitive(TilesplitError):
    pass


class CommensurableScheme(TilesplitError):
    pass


class IncommensurableInput(TilesplitError):
    pass


class SlideInfeasible(TilesplitError):
    pass
