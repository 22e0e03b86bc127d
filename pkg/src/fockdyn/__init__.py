"""Indistinguishability measures and many-body dynamics of multi-species
bosons on coupled modes."""

from ._version import __version__
from .errors import (
    BasisMismatch,
    ConvergenceFailure,
    DecompositionFailure,
    DegenerateNormalization,
    DimensionMismatch,
    DimensionOverflow,
    EmptyConfiguration,
    InconsistentDensities,
    InvalidImbalance,
    NegativeOccupation,
    NonHermitianInput,
    NormalizationError,
    NumericalError,
    QuadratureNonConvergence,
    UndefinedDOI,
    UsageError,
    ValidationError,
)
from .fock import (
    DoubleWellClass,
    FockConfiguration,
    MultiplicityTables,
    SectorBasis,
    SuperposedFock,
    TwoModeParams,
    canonical_species_order,
    doi,
    doi_superposition,
    enumerate_sector,
    make_config,
    multiplicity_tables,
    nonequivalent_double_well,
    nonequivalent_species_splits,
    sector_dimension,
    two_mode_doi,
    two_mode_params,
)
from .freedyn import (
    FluctuationReport,
    TwoParticleObservable,
    coincidence_observable,
    density_variance,
    expectation_1po,
    expectation_2po,
    fi_deviation_bounds,
    normalized_fluctuation,
    onebody_square,
    pair_counter,
)
from .harness import (
    ExperimentRecord,
    FiScanResult,
    Histogram2D,
    SampleSpec,
    fi_scan,
    interaction_sweep,
    sample_configs,
    sample_occupations,
    scenario_parameters,
)
from .manybody import (
    BipartiteCheck,
    InteractionModel,
    ManyBodyOperator,
    PerturbationKernel,
    SpectralDecomposition,
    bipartite_parity_check,
    build_hamiltonian,
    contact_interaction,
    density_operator,
    diagonalize,
    evolve_observable,
    first_order_prediction,
    onebody_operator,
    perturbation_kernel,
    perturbation_term,
    species_number_operator,
    time_avg_variance,
    twobody_operator,
)
from .onebody import (
    AveragedCoefficients,
    HoppingModel,
    Propagator,
    TwoPathAmplitude,
    averaged_coefficients,
    coefficient_stats,
    fit_mu_c,
    fit_ratio,
    fit_w_c,
    hardwall_chain,
    propagator,
    two_path_amplitude,
)

__all__ = [name for name in dir() if not name.startswith("_")]
