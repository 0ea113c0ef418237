"""Exception types shared across the toolkit."""


class RestructError(Exception):
    """Base class for all toolkit errors."""


class EncodingError(RestructError):
    """Input bytes could not be decoded as text."""


class UnknownNodeError(RestructError):
    """A node id does not resolve in the document it was used against."""


class BudgetError(RestructError):
    """Chunk token budget below the supported minimum."""


class ProviderError(RestructError):
    """A chat or embedding provider call failed."""


class SequenceError(RestructError):
    """A sequential chunk run aborted; carries the failing chunk index."""

    def __init__(self, chunk_index: int, cause: Exception):
        super().__init__(f"provider failed at chunk {chunk_index}: {cause}")
        self.chunk_index = chunk_index
        self.cause = cause


class PatchError(RestructError):
    """Patch payload could not be parsed or applied."""


class GateFailure(RestructError):
    """Similarity gate not met after the configured number of attempts."""

    def __init__(self, best_score: float, threshold: float, attempts: int):
        super().__init__(
            f"similarity gate failed: best score {best_score:.4f} "
            f"< threshold {threshold:.4f} after {attempts} attempt(s)"
        )
        self.best_score = best_score
        self.threshold = threshold
        self.attempts = attempts
