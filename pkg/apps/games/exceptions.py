"""
Domain errors shared by the solver apps.

Malformed input files are reported through DRF ValidationError codes (see
apps.games.serializers); the classes below cover everything else.
"""


class BudgetExceeded(RuntimeError):
    """An explicit construction outgrew its configured budget."""

    def __init__(self, message: str, budget: int):
        super().__init__(message)
        self.budget = budget


class StateBudgetExceeded(BudgetExceeded):
    pass


class SizeBudgetExceeded(BudgetExceeded):
    pass


class DeviatorHasSingletonAlphabet(ValueError):
    pass


class UnknownState(ValueError):
    pass


class UnknownAgent(ValueError):
    pass


class MissingSolution(ValueError):
    pass


class LassoNotAccepting(ValueError):
    pass


class AlphabetMismatch(ValueError):
    pass
