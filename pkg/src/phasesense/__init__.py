"""Phase-insensitive displacement sensing with bosonic probe states."""

from .channels import (
    ChannelConfig,
    ChannelVariant,
    Regime,
    SmallTimeConfig,
    ThermalBathConfig,
    apply_decoherence,
    exact_lindblad,
    integrate_master,
    phase_randomized_diagonals,
    phase_randomized_full,
    small_time_map,
)
from .fock import (
    DensityMatrix,
    NumberDistribution,
    OverlapKernel,
    TruncationPolicy,
    displaced_fock_overlap,
    laguerre_assoc,
    wigner_at,
)
from .metrology import FisherResult, fisher_information, gain, occupation_bound
from .states import Family, StateSpec, build, solve_for_occupation

__version__ = "0.1.0"
