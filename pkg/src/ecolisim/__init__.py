"""Numerical simulator for a chemotaxis-growth model of colony patterning.

Four coupled fields on a rectangle with zero-flux boundaries: motile
cells u, chemoattractant c, nutrient n, immobilized cells w. The
package provides the IMEX PDE stepper (fully parabolic and
parabolic-elliptic variants), the well-mixed kinetic reduction,
conservation/monotonicity diagnostics, concentration (blow-up)
detection, and a CLI.
"""

from ._kernels import BACKEND as kernel_backend
from .diagnostics import (
    DiagnosticsSeries,
    MassRecord,
    MomentWeight,
    blow_up_threshold,
    check_monotonicity,
    estimate_decay_rate,
    masses,
    moment,
    moment_weight,
)
from .errors import (
    ConfigurationError,
    DomainError,
    EcolisimError,
    NumericsError,
    SnapshotFormatError,
    SolverError,
)
from .grid import (
    Field,
    Grid,
    build_grid,
    chemotactic_divergence,
    first_neumann_eigenvalue,
    laplacian_neumann,
)
from .kinetics import KineticState, integrate_to_steady, kinetics_rhs, step_kinetics
from .models import (
    ModelParams,
    NonlinearitySpec,
    constant_death,
    eval_death,
    eval_growth,
    eval_sensitivity,
    linear_sensitivity,
    rational_death,
    saturating_sensitivity,
    tabulated_death,
    tabulated_growth,
    tanh_growth,
    validate_assumptions,
    zero_growth,
)
from .stepper import (
    EllipticSolveSettings,
    RunResult,
    Schedule,
    SimState,
    StepControl,
    StopRules,
    compute_stable_dt,
    run_simulation,
    solve_elliptic_c,
    step_parabolic_elliptic,
    step_parabolic_parabolic,
)

__version__ = "0.1.0"
