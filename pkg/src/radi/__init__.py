"""Low-rank solver for large-scale continuous-time algebraic Riccati equations.

The iteration expands a factored iterate X = Z Y^{-1} Z^T by one shifted
linear solve per step, keeps the residual in factored form for O(n p^2)
norm evaluation, and merges conjugate shift pairs so that real problems
stay in real arithmetic. Dense reference formulations (quadratic ADI,
Cayley subspace iteration, Hamiltonian invariant subspaces) are included
as oracles; they generate the same iterates and back the test suite.
"""

from .cube import cube_operator, generate_cube
from .dense import (
    StabilityReport,
    cayley_subspace_step,
    dense_care_solve,
    dense_residual,
    hamiltonian_matrix,
    invariant_subspace_approx,
    loewner_and_stability_checks,
    qadi_dense_step,
    stable_hamiltonian_eigenpairs,
)
from .exceptions import (
    DimensionError,
    MatrixMarketError,
    NoShiftsError,
    NoStableShiftError,
    OracleFailure,
    RadiError,
    RealShiftError,
    ShiftDomainError,
    SingularEError,
    SingularShiftError,
    SmwBreakdownError,
)
from .iteration import (
    Arithmetic,
    SolveOptions,
    SolveOutcome,
    Status,
    lyapunov_adi_step,
    radi_step_complex,
    radi_step_generalized,
    radi_step_real_pair,
    solve,
)
from .linsolve import ShiftedFactorization, shifted_solve, smw_shifted_solve
from .mmio import read_matrix_market, write_matrix_market
from .problem import (
    IterationRecord,
    LowRankState,
    RiccatiProblem,
    Shift,
    ShiftKind,
    assemble_dense,
    relative_residual,
    residual_norm,
)
from .shifts import (
    DynamicConfig,
    PenzlConfig,
    ProjectedResidual,
    UserList,
    make_session,
    penzl_shifts,
    projected_hamiltonian,
    residual_hamiltonian_shift,
    residual_min_gradient,
    residual_min_objective,
    residual_minimizing_shift,
)
from .verify import run_verify

__version__ = "0.1.0"

__all__ = [
    "Arithmetic",
    "DimensionError",
    "DynamicConfig",
    "IterationRecord",
    "LowRankState",
    "MatrixMarketError",
    "NoShiftsError",
    "NoStableShiftError",
    "OracleFailure",
    "PenzlConfig",
    "ProjectedResidual",
    "RadiError",
    "RealShiftError",
    "RiccatiProblem",
    "Shift",
    "ShiftDomainError",
    "ShiftKind",
    "ShiftedFactorization",
    "SingularEError",
    "SingularShiftError",
    "SmwBreakdownError",
    "SolveOptions",
    "SolveOutcome",
    "StabilityReport",
    "Status",
    "UserList",
    "assemble_dense",
    "cayley_subspace_step",
    "cube_operator",
    "dense_care_solve",
    "dense_residual",
    "generate_cube",
    "hamiltonian_matrix",
    "invariant_subspace_approx",
    "loewner_and_stability_checks",
    "lyapunov_adi_step",
    "make_session",
    "penzl_shifts",
    "projected_hamiltonian",
    "qadi_dense_step",
    "radi_step_complex",
    "radi_step_generalized",
    "radi_step_real_pair",
    "read_matrix_market",
    "relative_residual",
    "residual_hamiltonian_shift",
    "residual_min_gradient",
    "residual_min_objective",
    "residual_minimizing_shift",
    "residual_norm",
    "run_verify",
    "shifted_solve",
    "smw_shifted_solve",
    "solve",
    "stable_hamiltonian_eigenpairs",
    "write_matrix_market",
]
