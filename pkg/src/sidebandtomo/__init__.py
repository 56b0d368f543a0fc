"""Simulation and tomography of two-sideband Gaussian states of light.

Compares spectral homodyne detection with resonator (self-homodyne)
detection as linear Gaussian measurements of the sideband pair.
"""

from .cavity import (
    CavityParams,
    Coupling,
    SidebandResponse,
    apply_cavity_channel,
    effective_reflection,
    reflection,
    sideband_response,
    transmission,
)
from .detection import (
    LockedScan,
    NoiseModel,
    PhotocurrentMoments,
    ScanCurve,
    ScanKind,
    add_estimation_noise,
    hd_scan,
    rd_locked_scan,
    rd_moments,
    rd_scan,
    s_hd,
    s_rd,
)
from .errors import (
    CarrierExtinguishedError,
    IllConditionedWarning,
    NonPhysicalStateError,
    ParseError,
    RankDeficiencyError,
    SidebandError,
)
from .preparation import (
    PreparationParams,
    attenuate_mode,
    prepare_psi1,
    prepare_psi2,
    prepare_rho,
    prepare_rho_r,
    randomize_displacement,
)
from .reconstruct import (
    FitReport,
    ReconstructionResult,
    compare_states,
    fit_hd_curve,
    fit_rd_power_curve,
    identifiability_report,
    reconstruct_covariance,
)
from .state import (
    EnergySummary,
    HDCoefficients,
    ModeIndex,
    TwoModeState,
    canonical_hd_state,
    displace,
    energy_summary,
    from_plus_minus,
    hd_coefficients,
    mode_energy,
    physicality_check,
    purity,
    single_mode_marginal,
    to_plus_minus,
    vacuum,
    wigner_eval,
)

__version__ = "0.1.0"
