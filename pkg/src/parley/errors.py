"""Exception types shared across the engine."""


class ParleyError(Exception):
    """Base class for all engine errors."""


class ParseError(ParleyError):
    """A fixture file failed to parse; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateId(ParleyError):
    """The same entity id appeared twice within one snapshot."""


class DuplicateDocId(ParleyError):
    """The same document id appeared twice in a corpus."""


class UnknownSource(ParleyError):
    """A snapshot's source id is missing from the merge priority list."""


class DanglingEdge(ParleyError):
    """An edge target id failed to resolve after all snapshots were merged."""


class UnknownEntity(ParleyError):
    """Lookup of an entity id that is not in the knowledge base."""


class EmptyText(ParleyError):
    """A text operation was given an empty string."""


class OutOfOrderTurn(ParleyError):
    """A turn record violated index continuity or speaker alternation."""


class NoAntecedent(ParleyError):
    """No compatible entity for an anaphoric mention within the window."""


class SentimentRange(ParleyError):
    """Opinion sentiment outside the 1..5 scale."""


class NoFocusEntity(ParleyError):
    """The session has no salient entity to expand from."""


class NoOpinion(ParleyError):
    """No opinion entry matches the requested target."""


class NoStory(ParleyError):
    """No story exists for the requested bin."""


class StoryExhausted(ParleyError):
    """The story cursor moved past the last sentence."""


class MissingSlot(ParleyError):
    """A template slot was not provided."""

    def __init__(self, slot: str):
        self.slot = slot
        super().__init__(f"missing slot: {slot}")


class EmptyPool(ParleyError):
    """rank_pool was handed no candidates."""


class InsufficientData(ParleyError):
    """Too few rated samples to fit ranking weights."""


class MalformedTranscript(ParleyError):
    """A transcript violated the turn record contract."""


class EmptyList(ParleyError):
    """An aggregate was requested over zero sessions."""


class UnknownSession(ParleyError):
    """A turn was posted to a session id that does not exist."""


class EmptyInput(ParleyError):
    """A user turn with no content."""
