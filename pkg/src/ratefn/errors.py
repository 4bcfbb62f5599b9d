"""Exception types shared across the package."""


class RatefnError(Exception):
    """Base class for every error raised by this package."""


class ParseError(RatefnError):
    """A file could not be parsed; the message carries a 1-based line number."""


class ValidationError(RatefnError):
    """Data violates an input contract (negative / non-finite loss, bad shapes)."""


class EmptyDataset(RatefnError):
    """A dataset with no records was given or loaded."""


class MissingGroupId(RatefnError):
    """An operation that needs augmentation groups found a record without one."""


class UnknownSampleId(RatefnError):
    """A relabeling map does not cover some sample id."""


class InvalidLambda(RatefnError):
    """Tilt parameter is negative or non-finite."""


class InvalidA(RatefnError):
    """Deviation level is non-positive or non-finite."""


class InvalidS(RatefnError):
    """Rate budget is non-positive or non-finite."""


class InvalidMeta(RatefnError):
    """Model metadata (parameter count, sample size, delta, epsilon) is invalid."""


class SolverFailure(RatefnError):
    """A bracket could not be established below the tilt cap."""


class InternalConsistencyError(RatefnError):
    """A quantity violated a theorem by more than round-off; indicates a bug."""


class ZeroVariance(RatefnError):
    """The quadratic rate approximation needs strictly positive loss variance."""


class MissingGradients(RatefnError):
    """Parameter-gradient annotations are required but absent."""


class MissingGradNorms(RatefnError):
    """Input-gradient norm annotations are required but absent."""


class DimensionMismatch(RatefnError):
    """Gradient vectors and the displacement vector disagree in length."""


class NonRationalProbs(RatefnError):
    """Probabilities cannot be expanded exactly with the given denominator."""
