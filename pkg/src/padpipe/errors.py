"""Exception types raised across the pipeline."""


class PadError(Exception):
    """Base class for all padpipe errors."""


class ManifestError(PadError):
    """Manifest file could not be parsed or failed validation."""


class FrameLoadError(PadError):
    """A frame file referenced by a manifest entry could not be loaded."""

    def __init__(self, capture_id: str, path: str, reason: str = ""):
        self.capture_id = capture_id
        self.path = path
        msg = f"capture {capture_id!r}: cannot load frame {path!r}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class NoUsableFrames(PadError):
    """Too few non-blank frames to select an analysis pair."""


class EmptyRidgeSet(PadError):
    """No ridge branch of sufficient length was found."""


class AlignmentError(PadError):
    """Element-wise operands could not be brought onto common support."""


class InsufficientFrames(PadError):
    """An operation needs more frames than the sequence provides."""


class MetricsUndefined(PadError):
    """Score set contains only one class; error rates are undefined."""


class LayoutMismatch(PadError):
    """Feature layout of the input does not match the model's layout."""


class TrainingDiverged(PadError):
    """Training produced a non-finite loss."""


class ConfigError(PadError):
    """Invalid run configuration."""
