"""Exception types shared across the package."""


class GreenWaveError(Exception):
    """Base class for every error raised by this package."""


class CorridorFormatError(GreenWaveError, ValueError):
    """A corridor or plan document could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message)


class PlanError(GreenWaveError, ValueError):
    """A node plan is structurally unusable for the requested operation."""


class PlanValidationError(PlanError):
    """Raised when a plan fails validation; carries the violation list."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"{v.site or '-'}: {v.reason}" for v in self.violations)
        super().__init__(f"plan has {len(self.violations)} violation(s): {lines}")


class DomainError(GreenWaveError, ValueError):
    """An argument lies outside the domain where a model is defined."""


class HorizonError(GreenWaveError, RuntimeError):
    """A signal was queried outside its generated green-start window."""


class CollisionError(GreenWaveError, RuntimeError):
    """A follower passed its leader. Always a controller bug."""


class ScenarioError(GreenWaveError, ValueError):
    """A scenario document is invalid."""
