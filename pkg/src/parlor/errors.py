"""Exception types shared across the engine."""


class ParlorError(Exception):
    """Base class for all engine errors."""


class ParseError(ParlorError):
    """A file or message failed to parse."""


class ValidationError(ParlorError):
    """Parsed data violates a catalog or config invariant."""


class ContractViolation(ParlorError):
    """A caller broke a documented precondition."""


class EmptyCandidates(ParlorError):
    """Arbitration was asked to choose from an empty candidate list."""


class EmptyIntent(ParlorError):
    """Grounding was asked to resolve empty intent text."""


class DimensionMismatch(ParlorError):
    """Vectors of different dimension were compared."""


class ZeroVector(ParlorError):
    """A zero-norm vector cannot be cosine-compared."""


class EmbedderFailure(ParlorError):
    """The embedding backend failed (transport, timeout, bad response)."""


class PolicyFailure(ParlorError):
    """The policy backend failed; the acting agent skips this cycle.

    `kind` is one of "timeout", "transport", "malformed".
    """

    def __init__(self, kind: str, message: str = ""):
        self.kind = kind
        super().__init__(f"{kind}: {message}" if message else kind)


class UnknownAgent(ParlorError):
    """A message or event referenced an agent not present in the room."""


class UnknownBundle(ParlorError):
    """A trigger or probe referenced a bundle id not in the catalog."""


class EmptyTrace(ParlorError):
    """A metric was requested over a trace with no events."""


class ReplayError(ParlorError):
    """A trace file could not be replayed; carries the offending line number."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class IOFailure(ParlorError):
    """Trace sink write failed; the trial aborts with a partial trace."""
