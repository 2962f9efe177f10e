"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class BracketError(DomainError):
    """A root-finding bracket does not contain a sign change."""


class InconsistentTargetError(ValueError):
    """A target incentive cannot come from any price schedule.

    ``residual`` holds the violated balance (zero-sum integral or the
    compatibility defect at saturation).
    """

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class ConsistencyError(RuntimeError):
    """A solver produced a state violating its own invariants."""


class ConfigError(ValueError):
    """Invalid run configuration. ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class SweepError(RuntimeError):
    """A sweep cell failed; ``m`` and ``epsilon`` locate the cell."""

    def __init__(self, m, epsilon, cause):
        super().__init__(f"sweep cell (m={m}, epsilon={epsilon}) failed: {cause}")
        self.m = m
        self.epsilon = epsilon
