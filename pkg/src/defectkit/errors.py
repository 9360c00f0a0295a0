"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: configuration problems exit 1,
data problems exit 2, numeric failures exit 3.
"""


class DefectKitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(DefectKitError):
    """Invalid or inconsistent run configuration."""


# -- image domain -------------------------------------------------------------

class ChannelMismatchError(DefectKitError):
    """Image has the wrong number of channels for the operation."""


class InvalidDimensionError(DefectKitError):
    """Requested image dimensions are not positive."""


class InvalidThresholdError(DefectKitError):
    """Canny thresholds violate 0 <= low < high <= 1."""


class UnsupportedImageError(DefectKitError):
    """Image file uses an unsupported format or bit depth."""


# -- feature domain ------------------------------------------------------------

class IndivisibleDimensionsError(DefectKitError):
    """Image dimensions are not divisible by the block grid."""


class NonBinaryInputError(DefectKitError):
    """Edge map contains values other than 0 and 255."""


# -- network domain ------------------------------------------------------------

class ShapeMismatchError(DefectKitError):
    """Tensor shapes do not compose."""


class InvalidTopologyError(DefectKitError):
    """Network structural parameters are invalid."""


class UnsupportedResolutionError(DefectKitError):
    """Input resolution outside the supported set."""


class NonFiniteLossError(DefectKitError):
    """Training loss became NaN or Inf; carries the epoch it happened in."""

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"loss became non-finite at epoch {epoch}")


class ModelFormatError(DefectKitError):
    """Model file is corrupt or has an unknown format version."""


# -- dataset domain ------------------------------------------------------------

class TooFewSamplesError(DefectKitError):
    """Dataset too small for the requested split."""


class InsufficientPoolError(DefectKitError):
    """Not enough non-defective samples; carries the shortfall count."""

    def __init__(self, shortfall: int, message: str | None = None):
        self.shortfall = shortfall
        super().__init__(message or f"non-defective pool short by {shortfall} samples")


class InvalidKError(DefectKitError):
    """k outside 2 <= k <= n for k-fold splitting."""


class EmptyDatasetError(DefectKitError):
    """No samples found under the dataset root."""


class UnreadableImageError(DefectKitError):
    """An image file could not be decoded; message names the file."""


# -- evaluation domain ---------------------------------------------------------

class LengthMismatchError(DefectKitError):
    """Prediction and label lists differ in length."""


class EmptyMatrixError(DefectKitError):
    """Confusion matrix has no counted samples."""


class SingleClassError(DefectKitError):
    """ROC needs both classes present in the labels."""
