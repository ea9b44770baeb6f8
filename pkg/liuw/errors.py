# see LICENSE
"""Exceptions raised by :mod:`liuw`"""


class LiuwError(Exception):
    """Base class of every error raised on purpose by this package"""


class NonMonotonicTime(LiuwError):
    """
    Raised when a propagation step is asked to go backwards or stand still
    """


class GapTooLarge(LiuwError):
    """
    Raised when two consecutive IMU samples are further apart than the
    dropout tolerance
    """


class CoverageGap(LiuwError):
    """
    Raised when the IMU window handed to the undistortion does not span
    the whole LiDAR sweep
    """


class DegeneratePlane(LiuwError):
    """
    Raised when a plane is fitted to collinear or coincident points
    """


class UnknownAnchor(LiuwError):
    """Raised when a UWB range refers to an anchor id not configured"""


class AntennaAtAnchor(LiuwError):
    """
    Raised when the predicted antenna position is too close to an anchor
    for the range Jacobian to be defined
    """


class SingularInnovation(LiuwError):
    """Raised when an innovation covariance can not be inverted"""


class NumericalFailure(LiuwError):
    """
    Raised when an iterated update produces a non-finite iterate

    The pipeline drops the frame and keeps the propagated prior.
    """


class InsufficientAnchors(LiuwError):
    """Raised when fewer than three anchor ranges are available"""


class DegenerateGeometry(LiuwError):
    """Raised when the anchors used for a fix are collinear"""


class NotStationary(LiuwError):
    """
    Raised when the initialisation window shows the robot was moving
    """


class EmptyStream(LiuwError):
    """Raised when a run is started without any record"""


class NoOverlap(LiuwError):
    """
    Raised when an evaluation checkpoint falls outside the estimated
    trajectory
    """


class ConfigError(LiuwError):
    """
    Raised when a configuration file has unknown keys or invalid values
    """


class LogFormatError(LiuwError):
    """
    Raised when a sensor log line can not be decoded

    :ivar lineno: 1-based line number of the offending line
    """

    def __init__(self, lineno, reason):
        super(LogFormatError, self).__init__(
            "line %d: %s" % (lineno, reason))
        self.lineno = lineno
        self.reason = reason


class PipelineError(LiuwError):
    """
    Raised by the replay loop when a record can not be processed

    :ivar index: 0-based index of the record in the stream
    """

    def __init__(self, index, cause):
        super(PipelineError, self).__init__(
            "record %d: %s: %s" % (index, type(cause).__name__, cause))
        self.index = index
        self.cause = cause
