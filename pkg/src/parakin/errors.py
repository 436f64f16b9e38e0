"""Exception types shared across the solver modules."""


class SimulationError(Exception):
    """Base class for solver failures."""


class MeshTooSmall(SimulationError):
    """Grid has too few cells for the requested operation (stencils need >= 7)."""


class SolvabilityViolation(SimulationError):
    """Density incompatible with the periodic field equation; signals a
    mass-accounting bug upstream."""


class StabilityViolation(SimulationError):
    """Time step exceeds the stability bound of the scheme."""


class NonFiniteState(SimulationError):
    """A propagated density became non-finite (blow-up)."""


class ConfigError(SimulationError):
    """Invalid or unparsable run configuration."""
