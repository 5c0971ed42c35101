"""Exception types shared across the package.

Every domain error derives from ImplabError so callers can catch the
whole family at once.  Errors that carry useful context (a step index,
a list of offending entries) store it as an attribute in addition to
the message.
"""

from __future__ import annotations


class ImplabError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ImplabError):
    """Invalid configuration file or parameter set."""


# --- map family ------------------------------------------------------------

class NoConvergence(ImplabError):
    """An iterative solver (Newton, secant) exhausted its budget."""


class OutsideInvertibleRegion(ImplabError):
    """Point lies outside the neighbourhood where the map is invertible."""


class DegenerateInput(ImplabError):
    """Quadratic part does not satisfy the standing hypotheses (P = 0)."""


class DegenerateDirection(ImplabError):
    """Requested director of a degenerate characteristic direction."""


# --- regions ---------------------------------------------------------------

class EpsOutsideSector(ImplabError):
    """Perturbation parameter violates Re(eps) > 0 or |Im eps| <= c|eps|^2."""


class BudgetExceeded(ImplabError):
    """Orbit simulation hit its iteration budget before the watched event."""


# --- coordinates -----------------------------------------------------------

class PoleAtGate(ImplabError):
    """Chart evaluated at one of the split fixed points x = +-i*eps."""


class OutsideStrip(ImplabError):
    """Argument of the inverse gate chart lies outside the image strip."""


class NotInBasin(ImplabError):
    """Point is not in the attracting region where the series converges."""


class NotInRepellingBasin(ImplabError):
    """Point is not in the repelling region (backward orbit undefined)."""


class OrbitLeftDomain(ImplabError):
    """Orbit left the admissible region before the requested step count.

    The offending step index is stored in ``step``.
    """

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"orbit left the domain at step {step}")


class DomainViolation(ImplabError):
    """Input outside the stated domain of a utility function."""


# --- alpha sequences / transfer maps ----------------------------------------

class SectorViolation(ImplabError):
    """Alpha-sequence entries whose eps leaves the admissible sector.

    Offending indices are stored in ``indices``.
    """

    def __init__(self, indices, message: str = ""):
        self.indices = list(indices)
        super().__init__(
            message or f"sector condition fails at entries {self.indices}"
        )


class OrbitEscaped(ImplabError):
    """A transfer-map tail orbit escaped the configured ball.

    The sequence index is stored in ``index``.
    """

    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"orbit escaped at sequence entry {index}")


class ImageNotInRepellingBasin(ImplabError):
    """Transfer-map image fell outside the repelling region."""


# --- rasters ---------------------------------------------------------------

class GridMismatch(ImplabError):
    """Two rasters do not share the same grid geometry."""


class NotRegular(ImplabError):
    """Escape classification requested for a non-regular family."""


class InconclusiveScene(ImplabError):
    """Discontinuity scene produced no certified witness."""
