"""Exception types shared across the solver and diagnostic modules."""

from __future__ import annotations


class GaugeError(ValueError):
    """An elliptic inversion was asked for on a field with nonzero mean."""


class BlowUpError(RuntimeError):
    """Non-finite values appeared during time stepping.

    Carries the last finite state so the caller can dump it.
    """

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class FrontEventError(RuntimeError):
    """Base class for front-tracking events that terminate a run."""


class FrontCollapseError(FrontEventError):
    """The ordering f- < f+ failed at one or more samples.

    Carries the offending (unordered) pair for reporting.
    """

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class FrontLostError(FrontEventError):
    """A column scan found no level crossing inside the window."""


class FrontBreakdownError(FrontEventError):
    """A front curve left graph representability (non-finite or folding)."""


class ParticleAdvectionError(RuntimeError):
    """A tracked particle acquired a non-finite position."""

    def __init__(self, message, particle_ids=()):
        super().__init__(message)
        self.particle_ids = tuple(particle_ids)


class ConfigError(ValueError):
    """Run configuration is missing, malformed, or inconsistent."""
