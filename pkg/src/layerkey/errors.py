"""Exception types shared across the library."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class NoBracket(ValueError):
    """Root finding was given an interval whose endpoints do not bracket a sign change."""


class MaxIterExceeded(RuntimeError):
    """An iterative routine hit its iteration budget before reaching tolerance."""


class NonFiniteIntegrand(ArithmeticError):
    """The integrand returned NaN or infinity inside the integration interval."""


class NonFiniteValue(ArithmeticError):
    """A function evaluation produced NaN or infinity."""


class ProfileNonMonotone(RuntimeError):
    """Solved interference values increase somewhere beyond the allowed slack."""


class DegenerateProfile(RuntimeError):
    """No interior power profile exists for the requested parameters."""


class DimensionMismatch(ValueError):
    """Array shapes of a channel/allocation pair are inconsistent."""


class InstanceTooLarge(ValueError):
    """Exhaustive enumeration would exceed the feasible instance size."""
