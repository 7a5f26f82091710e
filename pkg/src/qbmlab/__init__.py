"""qbmlab — numerical verification lab for quantum Brownian-motion master equations.

Builds truncated-Fock-space and Gaussian-moment realizations of damped
quantum oscillator / free-particle master equations and checks which of the
structural properties — complete positivity, translation covariance of the
dissipative part, canonical equilibrium — each one actually has.
"""

from .checks import (
    HighTemperatureRow,
    PropertyVerdict,
    TrilemmaReport,
    check_canonicality,
    check_cp,
    check_equipartition,
    check_rotation_covariance,
    check_stationarity,
    check_translation_covariance,
    high_temperature_comparison,
    trilemma,
)
from .fock import (
    DensityMatrix,
    FockOperator,
    UnitaryOperator,
    build_ladder,
    build_quadratures,
    coherent_state,
    displacement_unitary,
    gibbs_state,
    ground_state_projector,
    maximally_mixed,
    number_superposition,
    rotation_unitary,
    trace_distance,
    truncation_residual,
    vacuum_state,
)
from .gaussian import (
    DriftDiffusion,
    GaussianMoments,
    NoStationaryReport,
    StationaryCovariance,
    equipartition_deltas,
    evolve_moments,
    generator_matrices,
    gibbs_covariance,
    stationary_covariance,
)
from .liouvillian import (
    EvolutionResult,
    StationaryState,
    Superoperator,
    assemble,
    choi_matrix,
    evolve,
    generator_residual,
    normalized_generator_residual,
    stationary_state,
)
from .models import (
    CoefficientForm,
    KossakowskiVerdict,
    LinearChannel,
    MasterEquationModel,
    ModelParams,
    QuadraticHamiltonian,
    caldeira_leggett,
    catalog_model,
    channels_from_kossakowski,
    coefficient_form_of,
    custom_coefficients,
    harmonic_extrapolation,
    kossakowski,
    kossakowski_of_model,
    rwa_optical,
    thermal_occupation,
    vme_diffusive,
)

__version__ = "0.1.0"
