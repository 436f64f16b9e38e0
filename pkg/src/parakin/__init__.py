"""parakin: hybrid kinetic/fluid solver for a 1D-3V Vlasov-Poisson-BGK model
in the diffusive scaling, with dynamic domain adaptation, Chapman-Enskog
lifting and parareal time parallelism."""

from .adaptation import (
    DomainLabels,
    Stencil7,
    Thresholds,
    apply_stencil,
    perturbation_indicator,
    remainder_indicator,
    update_labels,
)
from .config import RunConfig, parse_config
from .errors import (
    ConfigError,
    MeshTooSmall,
    NonFiniteState,
    SimulationError,
    SolvabilityViolation,
    StabilityViolation,
)
from .experiment import init_state, run_experiment, run_sweep
from .fluid import FluidStepParams, fluid_flux, fluid_propagate, fluid_step
from .hybrid import HybridOptions, HybridState, hybrid_propagate, hybrid_step
from .kinetic import (
    KineticStepParams,
    kinetic_propagate,
    kinetic_step,
    macro_step,
    micro_step,
    transport_term,
)
from .lifting import lift
from .mesh import (
    MacroState,
    MeshSpec,
    MicroState,
    PhaseMesh,
    VelocityGrid,
    bracket,
    build_mesh,
)
from .parareal import (
    PararealConfig,
    PararealLedger,
    PerfModel,
    RunResult,
    coarse_sweep,
    parareal_iterate,
    predict_cost,
    run,
)
from .poisson import solve_field

__version__ = "0.1.0"
