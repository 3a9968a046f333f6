"""Finite-N numerics and bound checks for the quantum random energy model."""

__version__ = "0.1.0"

from .analytics import (
    Phase,
    PhasePoint,
    ball_adjacency_norm_bound,
    ball_volume_bound,
    beta_c,
    classify_phase,
    gamma_c,
    gamma_c_bisect,
    goldschmidt_pressure,
    hamming_ball_volume,
    k_epsilon,
    magnetization_par,
    p_par,
    p_rem,
    r_epsilon,
    rem_entropy,
)
from .errors import (
    CapacityError,
    ConfigError,
    ConvergenceError,
    DimensionError,
    DomainError,
    QremError,
)
from .geometry import (
    BoundReport,
    ClusterDecomposition,
    LargeDeviationSet,
    RemainderOperator,
    bound_report,
    build_remainder,
    cluster_decomposition,
    decompose_hamiltonian,
    gibbs_lower_bounds,
    golden_thompson_upper,
    large_deviation_set,
    omega_event,
    remainder_norm_bound,
    remainder_norm_exact,
)
from .model import (
    INF,
    DisorderField,
    QremOperator,
    SpinConfiguration,
    apply_hamiltonian,
    covariance_oracle,
    dense_hamiltonian,
    field_mean,
    hamming_distance,
    sample_field,
    sample_pspin_field,
    sample_rem_field,
)
from .spectral import (
    Method,
    PressureRecord,
    SlqConfig,
    ground_state_energy,
    pressure_exact_classical,
    pressure_exact_dense,
    pressure_slq,
)
