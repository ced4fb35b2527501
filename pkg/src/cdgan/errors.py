"""Exception types shared across the pipeline.

Each error carries a stable ``code`` string so the CLI and tests can match
on the condition instead of message text.
"""


class PipelineError(Exception):
    code = "PIPELINE_ERROR"


class ShapeMismatch(PipelineError):
    code = "SHAPE_MISMATCH"


class BadMask(PipelineError):
    code = "BAD_MASK"


class UnsupportedFormat(PipelineError):
    code = "UNSUPPORTED_FORMAT"


class DegenerateBand(PipelineError):
    code = "DEGENERATE_BAND"


class SceneTooSmall(PipelineError):
    code = "SCENE_TOO_SMALL"


class BadSpatialDims(PipelineError):
    code = "BAD_SPATIAL_DIMS"


class NonBinaryInput(PipelineError):
    code = "NON_BINARY_INPUT"


class CheckpointMismatch(PipelineError):
    code = "CHECKPOINT_MISMATCH"


class BlobOutOfBounds(PipelineError):
    code = "BLOB_OUT_OF_BOUNDS"


class Divergence(PipelineError):
    """Training produced a non-finite loss. Carries the last checkpoint
    that was written before the abort, if any."""

    code = "DIVERGENCE"

    def __init__(self, message, last_checkpoint=None):
        super().__init__(message)
        self.last_checkpoint = last_checkpoint
