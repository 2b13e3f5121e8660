"""Exception types shared across the package."""


class RewardLabError(Exception):
    """Base class for all rewardlab errors."""


class InputError(RewardLabError, ValueError):
    """Malformed input value (empty configuration, non-positive rate, ...)."""


class DomainError(RewardLabError, ValueError):
    """A rule or scaling function was evaluated outside its declared domain."""


class InvalidLotteryError(RewardLabError, ValueError):
    """Allocation probabilities sum to more than one; no winner lottery exists."""


class SearchSpaceError(RewardLabError, ValueError):
    """Requested brute-force search exceeds the tractability guard."""


class SpecError(RewardLabError, ValueError):
    """A rule/utility/config spec string failed to parse.

    Carries the offending token and its position so callers can print a
    precise diagnostic.
    """

    def __init__(self, message: str, token: str | None = None, position: int | None = None):
        detail = message
        if token is not None:
            detail += f" (token {token!r}"
            if position is not None:
                detail += f" at position {position}"
            detail += ")"
        super().__init__(detail)
        self.token = token
        self.position = position
