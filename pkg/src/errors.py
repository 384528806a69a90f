"""Exception hierarchy. ``exit_code`` is what the CLI exits with."""

from __future__ import annotations


class AnalysisError(Exception):
    exit_code = 2


# --- Data errors (exit 2) ---


class DataError(AnalysisError):
    exit_code = 2


class MalformedRecord(DataError):
    def __init__(self, line_no: int, reason: str = ""):
        self.line_no = line_no
        msg = f"Malformed record at line {line_no}"
        super().__init__(f"{msg}: {reason}" if reason else msg)


class UnknownEventName(DataError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Unknown event name: {name!r}")


class EmptySession(DataError):
    def __init__(self, session_id: str = ""):
        super().__init__(f"Session {session_id!r} has no valid events")


class NoSessionsFound(DataError):
    pass


class ScoreOutOfRange(DataError):
    def __init__(self, row: int, value: int):
        self.row = row
        self.value = value
        super().__init__(f"Survey score {value} out of range [1, 7] in row {row}")


class ReplayGap(DataError):
    def __init__(self, event_index: int, reason: str = ""):
        self.event_index = event_index
        super().__init__(f"Cannot reconstruct document at event {event_index}: {reason}")


class EmptySample(DataError):
    pass


# --- Numeric errors (exit 3) ---


class NumericError(AnalysisError):
    exit_code = 3


class NonFiniteInput(NumericError):
    pass


class DimensionMismatch(NumericError):
    pass


class EmptyMemberSet(NumericError):
    pass


class TooFewSeries(NumericError):
    pass


class DegenerateSpace(NumericError):
    pass


class SampleTooSmall(NumericError):
    pass


class SampleTooLarge(NumericError):
    pass


class ZeroVariance(NumericError):
    pass


class EmptyCluster(NumericError):
    pass


class SingularSystem(NumericError):
    pass


# --- Similarity provider ---


class ProviderUnavailable(AnalysisError):
    """External similarity service failed; callers fall back to the lexical provider."""
