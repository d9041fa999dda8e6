"""Exceptions shared by the estimators, oracle and simulation engine."""


class EmptyArm(ValueError):
    """A sample (or design) has no observations in one treatment arm."""

    def __init__(self, arm: str):
        self.arm = arm
        super().__init__(f"no {arm} observations")


class PositivityViolation(ValueError):
    """A treatment probability of exactly 0 or 1 where inverse weighting needs (0, 1)."""


class Undefined(ValueError):
    """A design quantity that does not exist for this design; ``reason`` says why."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)
