"""Exception types raised across the pipeline."""


class GamelanSomError(Exception):
    """Base class for every error raised by this package."""


# corpus
class ParseError(GamelanSomError):
    pass


class ValidationError(GamelanSomError):
    pass


class IoError(GamelanSomError, OSError):
    pass


class UnsupportedFormat(GamelanSomError):
    pass


# spectral / timbre
class TooShort(GamelanSomError):
    pass


class SilentInput(GamelanSomError):
    pass


class SilentFrame(GamelanSomError):
    pass


class AllSilent(GamelanSomError):
    pass


class TooFewFrames(GamelanSomError):
    pass


class FlatTrajectory(GamelanSomError):
    pass


# som
class MixedSampleRates(GamelanSomError):
    pass


class MissingFeature(GamelanSomError):
    pass


class DegenerateDimension(GamelanSomError):
    pass


class InvalidParams(GamelanSomError):
    pass


class DimMismatch(GamelanSomError):
    pass


# synthcorpus
class InvalidDegree(GamelanSomError):
    pass


class InvalidSpec(GamelanSomError):
    pass


# viz / cli
class InconsistentInputs(GamelanSomError):
    pass


class MissingValue(GamelanSomError):
    pass


class ProvenanceMismatch(GamelanSomError):
    pass
