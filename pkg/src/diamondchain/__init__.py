"""Non-Hermitian PT-symmetric diamond-chain waveguide lattice.

Band structure, compact localized states, propagation under synthetic
electric and magnetic fields, and the diagnostics used to classify the
resulting Bloch-oscillation regimes.
"""

__version__ = "0.1.0"

from .model import (
    GROWTH_LAW,
    LAMBDA_CONVENTION,
    LatticeState,
    ModelError,
    ModelParams,
    PTCheck,
    bloch_operator,
    parity_matrix,
    pt_check,
    real_space_operator,
)
from .bands import (
    GAMMA_C,
    BandSolverError,
    BandSweep,
    CharacteristicCoefficients,
    GapReport,
    band_sweep,
    characteristic_coefficients,
    classify_gaps,
    solve_cubic,
)
from .cls import ClsSpec, build_cls, cls_residual
from .evolve import EvolveConfig, IntegrationFailure, Trajectory, evolve, evolve_oracle, gaussian_initial
from .diagnostics import (
    DiagnosticsSeries,
    SpectrumReport,
    conjugate_pairing_error,
    finite_spectrum,
    intensity,
    oscillation_metrics,
    series,
    streamed_series,
)
