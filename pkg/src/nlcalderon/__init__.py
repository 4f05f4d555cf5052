"""Higher-order linearization lab for the semilinear Calderon problem.

Forward solver for ``Lap u + q u^m = 0`` on a uniform rectangular grid,
its nonlinear Dirichlet-to-Neumann map, k-th order linearizations at zero
data, and Fourier reconstruction of ``q`` from second linearizations.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CalderonError,
    FrequencyTooLarge,
    GaugeViolation,
    JacobianSingular,
    NonConvergence,
    NonSquareCells,
    SolverFailure,
    StepTooSmall,
    TooSmall,
)
from .grid import (  # noqa: E402
    BoundaryFunction,
    Grid,
    GridFunction,
    boundary_integral,
    build_grid,
    interior_integral,
    normal_derivative,
)
from .harmonic import linear_dn, make_calderon_pair, solve_laplace_dirichlet  # noqa: E402
from .linearization import (  # noqa: E402
    LinearizationRequest,
    mixed_fd_dn,
    mth_linearization_direct,
    verify_vanishing_orders,
)
from .reconstruction import (  # noqa: E402
    FreqLattice,
    recover_fourier_sample,
    reconstruct_potential,
    stability_probe,
)
from .semilinear import (  # noqa: E402
    SemilinearProblem,
    SolveReport,
    estimate_delta,
    nonlinear_dn,
    solve_semilinear,
)
from .verification import ConformalFactor, completeness_smin, gauge_check  # noqa: E402
