"""Hidden-variable models for qubits: static equivalence, dynamics, no-go counting."""

from . import bell, dynamics, quantum, sphere
from .bell import IntegratorConfig, lhv_density, lhv_probabilities, lhv_probability
from .errors import ConfigError, ConstructionDomainError, IntegrationBudgetError, UnphysicalStateError
from .quantum import BlochTwoQubit, MeasurementEvent

__version__ = "0.1.0"
