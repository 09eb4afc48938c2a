"""Exception types shared across the toolkit.

Hierarchy matters for the CLI's exit-code mapping: UsageError -> 2,
DataError -> 3, EndpointError -> 4.
"""


class LptriageError(Exception):
    """Base class for all toolkit errors."""


class UsageError(LptriageError):
    """Bad invocation: missing/invalid configuration or arguments."""


class DataError(LptriageError):
    """Invalid or inconsistent input data."""


class EndpointError(LptriageError):
    """LLM endpoint failures."""


# --- corpus ---

class UnreadablePath(DataError):
    pass


class SchemaViolation(DataError):
    def __init__(self, record_index: int, reason: str):
        self.record_index = record_index
        self.reason = reason
        super().__init__(f"record {record_index}: {reason}")


class EmptyDataset(DataError):
    pass


class UnlabeledData(DataError):
    pass


class KExceedsClassCount(DataError):
    pass


class InsufficientNegatives(DataError):
    pass


class MissingTimestamp(DataError):
    pass


# --- lexicon ---

class MissingCategory(DataError):
    pass


class DuplicateEntryConflict(DataError):
    pass


class ZeroCorpus(DataError):
    pass


# --- patterns ---

class EmptyCorpus(DataError):
    pass


class MissingSentenceLabels(DataError):
    pass


class AdjudicatorUnavailable(EndpointError):
    pass


class PatternSetInvalid(DataError):
    pass


# --- classify ---

class LayoutMismatch(DataError):
    pass


class SingleClassData(DataError):
    pass


class NonFiniteLoss(LptriageError):
    pass


# --- llmbridge ---

class InsufficientExemplars(UsageError):
    pass


class PromptBudgetExceeded(UsageError):
    pass


class EndpointUnreachable(EndpointError):
    pass


class RateLimited(EndpointError):
    pass


class TranscriptMiss(EndpointError):
    pass


# --- eval ---

class IdMismatch(DataError):
    pass
