"""Exception hierarchy shared across the toolkit.

Every error raised on a bad input derives from :class:`FramescopeError`, so
the CLI can map any of them to a single non-zero exit code. Numerical
failures during training use :class:`DivergedLoss`, which carries the
training history accumulated up to the failing epoch.
"""


class FramescopeError(Exception):
    """Base class for all toolkit errors."""


# --- bitstream extraction ---------------------------------------------------

class NoStartCode(FramescopeError):
    """No Annex-B start code found; input is not an elementary stream."""


class NoFrames(FramescopeError):
    """Stream parsed but contains no coded-slice (VCL) units."""


class MalformedCode(FramescopeError):
    """Exp-Golomb codeword is invalid or the bit reader ran out of data."""


class NotMp4(FramescopeError):
    """File does not start like an ISO-BMFF container."""


class NoVideoTrack(FramescopeError):
    """Container parsed but holds no usable video track."""


class TruncatedBox(FramescopeError):
    """A box extends past its parent's extent or past end of file."""


# --- dataset / preprocessing ------------------------------------------------

class TooShort(FramescopeError):
    """Series is shorter than the requested window length."""


class ClassTooSmall(FramescopeError):
    """A class has too few items for the requested operation."""


# --- statistics ---------------------------------------------------------------

class EmptyInput(FramescopeError):
    """Operation requires at least one sample."""


class BinMismatch(FramescopeError):
    """Histograms being compared do not share bin edges."""


# --- classifier ---------------------------------------------------------------

class ShapeMismatch(FramescopeError):
    """Array shape incompatible with the layer or model definition."""


class EmptyDataset(FramescopeError):
    """Training or evaluation received an empty dataset."""


class DivergedLoss(FramescopeError):
    """Loss became non-finite; carries the history collected so far."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history


# --- DTW baseline -------------------------------------------------------------

class BandInfeasible(FramescopeError):
    """Sakoe-Chiba band too narrow for the given length difference."""


# --- metrics ------------------------------------------------------------------

class LabelOutOfRange(FramescopeError):
    """A label index is outside [0, C)."""


class EmptyConfusion(FramescopeError):
    """Metrics requested on a confusion matrix with zero total count."""


# --- synthetic generator -------------------------------------------------------

class BadProfile(FramescopeError):
    """Class profile violates its declared parameter ranges."""


# --- persistence ----------------------------------------------------------------

class IoFailure(FramescopeError):
    """File could not be read or written completely."""


class BadMagic(FramescopeError):
    """File does not start with the expected magic bytes."""


class VersionMismatch(FramescopeError):
    """File format version is not supported by this build."""
