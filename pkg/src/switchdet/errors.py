"""Exception types shared across the toolkit."""


class SwitchDetError(Exception):
    """Base class for all toolkit errors."""


class UnsupportedFormat(SwitchDetError):
    """Audio file is not mono PCM-16 or float-32 WAV."""


class RateMismatch(SwitchDetError):
    """Audio sample rate differs from the requested rate."""


class EmptyPool(SwitchDetError):
    """A stitching pool contains no usable utterances."""


class InsufficientVoicedFrames(SwitchDetError):
    """Not enough voiced frames on one side of a change point."""


class TooShort(SwitchDetError):
    """Signal shorter than a single analysis frame."""


class AllUnvoiced(SwitchDetError):
    """Voice activity detection found no voiced frames."""


class LengthMismatch(SwitchDetError):
    """Mask length does not match the frame count."""


class TooFewFrames(SwitchDetError):
    """Not enough data rows for the requested model size."""


class DimMismatch(SwitchDetError):
    """Operands disagree on vector dimension."""


class EmptyInput(SwitchDetError):
    """Operation received no data rows."""


class ModelShapeMismatch(SwitchDetError):
    """Models in a set disagree on component count or dimension."""


class RankDeficient(SwitchDetError):
    """Requested projection dimension exceeds what the data can support."""


class SingularCovariance(SwitchDetError):
    """Covariance matrix is not invertible."""


class ZeroVector(SwitchDetError):
    """Vector with zero norm where a direction is required."""


class InsufficientClasses(SwitchDetError):
    """Operation needs more distinct class labels."""


class InsufficientVectors(SwitchDetError):
    """Not enough vectors to build the requested trials."""


class OneClassOnly(SwitchDetError):
    """Both-class statistics requested from single-class data."""


class FormatError(SwitchDetError):
    """Model or embedding file does not parse."""


class ExtractorMismatch(SwitchDetError):
    """Embedding extractor and scorer are not compatible."""


class EmptyReference(SwitchDetError):
    """Evaluation received an empty reference set."""


class InvalidCounts(SwitchDetError):
    """Error-rate inputs are negative or inconsistent."""


class InsufficientMargin(SwitchDetError):
    """Utterance has no room for the requested analysis window."""
