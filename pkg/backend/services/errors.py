# backend/services/errors.py
"""Error types raised by the lab services.

Each error carries a short kebab-case ``code`` that the CLI prints and that
transcripts use when a condition is flagged instead of raised.
"""


class LocalizationLabError(Exception):
    code = "lab-error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


class InvalidVertexError(LocalizationLabError):
    code = "invalid-id"


class EmptyInstanceError(LocalizationLabError):
    code = "empty-instance"


class EmptyIntersectionError(LocalizationLabError):
    code = "empty-intersection"


class DegenerateTangencyError(LocalizationLabError):
    code = "degenerate-tangency"


class PreconditionViolatedError(LocalizationLabError):
    code = "precondition-violated"


class IllegalCopMoveError(LocalizationLabError):
    code = "illegal-cop-move"


class IllegalRobberMoveError(LocalizationLabError):
    code = "illegal-robber-move"


class InstanceTooLargeError(LocalizationLabError):
    code = "instance-too-large"


class NoBallClassError(LocalizationLabError):
    code = "no-ball-class"


class NoEmptyAnnulusError(LocalizationLabError):
    code = "no-empty-annulus"


class UnresolvableTwinsError(LocalizationLabError):
    code = "unresolvable-twins"


class NoWinAtCapError(LocalizationLabError):
    code = "no-win-at-cap"


class MalformedGraphFileError(LocalizationLabError):
    code = "malformed-graph-file"
