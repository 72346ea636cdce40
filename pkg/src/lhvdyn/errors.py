"""Exception types raised across the package."""


class UnphysicalStateError(ValueError):
    """Bloch data does not describe a positive semidefinite density matrix."""


class ConstructionDomainError(ValueError):
    """State lies outside the domain where the closed-form LHV density is valid."""


class IntegrationBudgetError(RuntimeError):
    """Integrator ran out of budget before reaching the requested tolerance."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""
