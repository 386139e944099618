"""Exception types shared across the package."""


class PoststallError(Exception):
    """Base class for all domain errors raised by this package."""


class ConfigError(PoststallError, ValueError):
    """A parameter, map or solver file is malformed or inconsistent."""


class GimbalLock(PoststallError):
    """Pitch is within the gimbal tolerance of +-pi/2."""


class NegativeThrust(PoststallError, ValueError):
    pass


class DegenerateVelocity(PoststallError):
    """Planar surface flow is too small for a defined angle of attack."""


class EmptyWorld(PoststallError):
    pass


class BoundaryError(PoststallError):
    """A gradient query is too close to the edge of the distance field."""


class PlanTimeout(PoststallError):
    pass


class CornerTooTight(PoststallError):
    """Adjacent path legs are too short for the curvature-limited spiral."""


class DomainError(PoststallError, ValueError):
    pass


class VelocityUnderflow(PoststallError):
    pass


class RiccatiBlowup(PoststallError):
    pass


class TrimInfeasible(PoststallError):
    pass
