"""Exception hierarchy shared across the package."""


class ScoreVoteError(Exception):
    """Base class for every error raised by scorevote."""


class ConfigError(ScoreVoteError):
    pass


class ModulusMismatch(ScoreVoteError):
    pass


class InversionOfZero(ScoreVoteError, ZeroDivisionError):
    pass


class ShareSetError(ScoreVoteError):
    pass


class InsufficientShares(ScoreVoteError):
    pass


class ChoiceError(ScoreVoteError):
    pass


class IllegalBallot(ScoreVoteError):
    def __init__(self, voter_tag, message="illegal ballot"):
        super().__init__(f"{message}: voter {voter_tag!r}")
        self.voter_tag = voter_tag


class ParseError(ScoreVoteError):
    pass


class SessionError(ScoreVoteError):
    pass


class PreprocessingError(ScoreVoteError):
    pass


class ChannelError(ScoreVoteError):
    """A frame failed authentication or could not be decoded."""


class ProtocolFailure(ScoreVoteError):
    """Errors that abort an election; ``phase`` names where it happened."""

    def __init__(self, message, phase=None):
        self.phase = phase
        if phase:
            message = f"[{phase}] {message}"
        super().__init__(message)


class AbortError(ProtocolFailure):
    pass


class EmptyElection(ProtocolFailure):
    pass


class SubmitTimeout(ProtocolFailure):
    pass
