"""Quasi-classical paths, detection-time densities and WKB comparison for a square tunneling barrier."""

__version__ = "0.1.0"

from .errors import (
    ConvergenceWarning,
    DomainError,
    FlatDensityError,
    IllConditionedError,
    MonotonicityError,
    NormalizationWarning,
    PacketWarning,
    PathRangeError,
    TunnelPathError,
)
from .scattering import (
    BarrierParams,
    PiecewisePotential,
    ScatteringAmplitudes,
    eigenfunction_minus,
    eigenfunction_plus,
    kappa,
    reflection_amplitude,
    scattering_amplitudes,
    transfer_matrix_solve,
    transfer_matrix_wavefunction,
    transmission_amplitude,
)
from .wavepacket import (
    Envelope,
    MomentumGrid,
    WaveFieldSample,
    WavePacketSpec,
    born_density,
    evolve_exact,
    evolve_grid,
    evolve_saddle,
    initial_state,
    momentum_amplitude,
    momentum_grid,
)
from .quasiclassical import (
    PathTable,
    PhaseData,
    allowed_region_time,
    argmax_tau,
    beta_exact,
    build_path,
    dimensionless_phase_time,
    ds_dd_exact,
    hartmann_asymptote,
    hartmann_velocity,
    invert_path,
    omega,
    path_time,
    phase_data,
    phase_theta,
    phase_time,
    s_of_d_exact,
    transmission_phase,
)
from .probabilities import (
    DetectorPair,
    ProbabilityTable,
    exit_point_ratio,
    first_detector_density,
    joint_density,
    joint_detection_probabilities,
    postselected_density,
    postselected_kernel,
    toa_density,
    total_transmission_probability,
    vn_postselected_density,
)
from .wkb import (
    Witness,
    WkbContext,
    find_witness,
    turning_point,
    wkb_beta,
    wkb_eigenfunction,
    wkb_entry_time,
    wkb_invertibility_witness,
    wkb_path_time,
    wkb_s_of_d,
    wkb_time_bound,
)
