"""Exception types shared across the package."""


class BohmflowError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(BohmflowError):
    """Field or vector shapes do not agree."""


class NodeEncountered(BohmflowError):
    """The density fell below the node threshold at the queried point."""


class OutOfDomain(BohmflowError):
    """Query outside the provider validity window or the configuration space."""


class OnSingularSet(BohmflowError):
    """A direction toward a singular subspace was requested at distance zero."""


class AxiomViolation(BohmflowError):
    """A current provider failed one of the defining current axioms.

    The ``axiom`` attribute names the failing item: '10a', '10c' or '10d'.
    """

    def __init__(self, axiom: str, message: str):
        super().__init__(f"current axiom ({axiom}) violated: {message}")
        self.axiom = axiom


class UnsupportedField(BohmflowError):
    """Hamiltonian shape the propagator cannot treat at the requested accuracy."""


class BadStart(BohmflowError):
    """Initial condition on a node or too close to the singular set."""


class ProviderWindow(BohmflowError):
    """Requested horizon exceeds the provider validity window."""


class DegenerateDensity(BohmflowError):
    """Initial density integrates to zero on the sampling grid."""


class TooFewSurvivors(BohmflowError):
    """Not enough non-cemetery points to compare distributions."""


class BoxTooLarge(BohmflowError):
    """Transported box boundary self-intersects at the mesh resolution."""


class WrongCodimension(BohmflowError):
    """Hardy inequality check requires exactly three normal directions."""


class WindowExceeded(BohmflowError):
    """Condition integrals requested beyond the provider window."""


class ConfigError(BohmflowError):
    """Malformed or contradictory run configuration."""
