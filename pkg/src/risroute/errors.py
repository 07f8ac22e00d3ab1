"""Exception types raised across the package."""


class ParameterError(ValueError):
    """An argument is outside the domain of the operation."""


class ConfigError(ValueError):
    """A configuration value is invalid or inconsistent."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DegenerateChannelError(ParameterError):
    """A channel has zero magnitude, so its phase is undefined."""


class NoGroupAvailable(LookupError):
    """Every group of a panel is OFF or busy."""


class BudgetViolation(RuntimeError):
    """A hop took longer than the delay budget it was granted."""
