"""Exception types shared across the toolkit."""


class UniverseMismatch(ValueError):
    """Two groups from different role universes were combined."""


class EmptyGroup(ValueError):
    """A channel was requested over an empty group or empty complement."""


class ComplementsNotDisjoint(ValueError):
    """role_block / 3-way linking requires disjoint group complements."""


class IllFormedSession(ValueError):
    """A session type mentions roles outside the universe or self-messages."""


class SessionSyntaxError(ValueError):
    def __init__(self, msg, pos):
        super().__init__(f"{msg} (at position {pos})")
        self.pos = pos


class TypeCheckError(Exception):
    """An expression or pool was rejected by the linear typechecker."""


class StuckError(Exception):
    """A closed expression is neither a value nor decomposable into a redex."""


class ChoiceNotEnabled(Exception):
    """The requested pool-reduction rule instance is not applicable."""


class DeadlockDetected(Exception):
    """No reduction applies / all agents blocked.  Carries diagnostics."""

    def __init__(self, message, snapshot=None, trace=None, pool=None):
        super().__init__(message)
        self.snapshot = snapshot
        self.trace = trace
        self.pool = pool


class IrregularInput(ValueError):
    """A channel-set collection violates regularity (overlap or unpaired half)."""


class NotEnabled(Exception):
    """The requested DF-reduction step does not apply."""


class ProtocolViolation(Exception):
    """A channel operation disagrees with the endpoint's session cursor."""


class UseAfterConsume(ProtocolViolation):
    """A linear endpoint handle was used twice, or used by a non-owner."""


class InconsistentBroadcast(Exception):
    """Replicated choice tags disagreed; indicates a runtime bug."""


class SessionMismatch(ValueError):
    """Endpoints passed to a link combinator do not carry dual/equal sessions."""


class SegmentIdentityViolation(Exception):
    """A sequencing segment returned a different channel than it was given."""


class SegmentIncomplete(Exception):
    """A sequencing segment returned before finishing its sub-session."""


class ScriptViolation(ValueError):
    """A queue-session script breaks the size discipline."""
