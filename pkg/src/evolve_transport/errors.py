"""Failure taxonomy.

Everything the library raises on purpose derives from LabError, so
verification drivers can catch one root and fold the failure into a
report instead of crashing.
"""


class LabError(Exception):
    """Root of the library's failure taxonomy."""


class EvaluationFailure(LabError):
    """A user-supplied map raised or returned a non-finite value."""


class RankDeficient(LabError):
    """A differential lost rank against the configured tolerance."""


class OrientationAmbiguous(LabError):
    """Membership probes on both sides of a candidate normal agree."""


class MatchFailure(LabError):
    """Nearest-point matching between two parametrizations failed."""


class NoIntegrationPath(LabError):
    """Neither a bulk parametrization nor a membership predicate applies."""


class WindowExceeded(LabError):
    """A time evaluation stepped outside the scenario's declared window."""


class DegenerateInterval(LabError):
    """An interval is too short for the finite-difference step in use."""
