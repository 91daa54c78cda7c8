"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    pass


class OutOfDomain(ValueError):
    pass


class IncompatibleLattice(ValueError):
    pass


class PreconditionViolated(ValueError):
    pass


class UndefinedConditional(ValueError):
    pass


class ConditionInapplicable(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    """The exact engine's state grew past its configured width.

    ``n_reached`` is the last step that was completed before the budget check failed.
    """

    def __init__(self, message, n_reached):
        super().__init__(message)
        self.n_reached = n_reached


class InsufficientSurvivors(RuntimeError):
    def __init__(self, message, count):
        super().__init__(message)
        self.count = count
