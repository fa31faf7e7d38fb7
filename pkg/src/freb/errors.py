"""Exception taxonomy.

PerturbSkip subclasses mark instances a perturbation legitimately cannot
handle; pipelines catch them, record the instance id + reason, and move on.
DatasetError / ConfigError are fatal and map to CLI exit codes 2 and 1.
"""

from __future__ import annotations


class FrebError(Exception):
    pass


class DatasetError(FrebError):
    """Unreadable, unparsable, or invariant-violating dataset content."""


class ConfigError(FrebError):
    """Bad CLI arguments or evaluate-config file."""


class BackendError(FrebError):
    """A model backend failed for one instance (timeout, bad output, ...)."""


class PerturbSkip(FrebError):
    """Base for per-instance conditions that skip a perturbation."""

    reason = "skipped"


class NoTargetFound(PerturbSkip):
    reason = "no table cell matches any gold answer"


class TooFewRows(PerturbSkip):
    reason = "table too small to partition"


class MissingAnnotation(PerturbSkip):
    reason = "required annotation absent"


class NonNumericCell(PerturbSkip):
    reason = "non-numeric cell in a numeric aggregation column"


class TieDetected(PerturbSkip):
    reason = "tie between extremal values"


class UnsupportedKind(PerturbSkip):
    reason = "aggregation kind not supported by this perturbation"


class CannotPerturb(PerturbSkip):
    reason = "no valid edit found within retry budget"


class NotEligible(PerturbSkip):
    reason = "instance not eligible for this perturbation"
