"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for failures raised by engine operations."""


class NonpositiveDepth(EngineError):
    pass


class EmptySelection(EngineError):
    pass


class AllLandmarksInvalid(EngineError):
    pass


class MissingLandmarks(EngineError):
    pass


class DegenerateCloud(EngineError):
    pass


class UnknownParam(EngineError):
    pass


class BehindCamera(EngineError):
    pass


class DecodeError(EngineError):
    pass


class FixtureMissing(EngineError):
    pass


class DepthServiceError(EngineError):
    pass


class SegmentServiceError(EngineError):
    pass


class LandmarkServiceError(EngineError):
    pass


class ProgramServiceError(EngineError):
    pass


class BindError(EngineError):
    pass


class CleanDegradedWarning(RuntimeWarning):
    """Outlier removal would have emptied the cloud; input returned unchanged."""
