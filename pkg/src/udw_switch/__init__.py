"""Two-detector cavity switch: first-order field states, entanglement and a Fock-space oracle."""
from .cavity import CavityConfig, SingleExcitationState, inner_product, mode_frequency, mode_function
from .entanglement import (BellReport, Branch, EffectiveTwoQubit, chsh_max, chsh_search, concurrence,
                           post_selected_state, protocol_bell_report)
from .errors import ConvergenceError, DegenerateStateError, DomainError
from .kinematics import (InteractionRegions, SeparationClass, TrajectoryParams, classify_separation,
                         delta_tau, delta_tau_asymptotic, proper_time_hyperbolic)
from .perturbation import (Order, OverlapResult, ProtocolParams, overlap, overlap_limit_check,
                           orthogonal_point, phi_amplitudes)

__version__ = "0.1.0"

__all__ = [
    "CavityConfig", "SingleExcitationState", "inner_product", "mode_frequency", "mode_function",
    "BellReport", "Branch", "EffectiveTwoQubit", "chsh_max", "chsh_search", "concurrence",
    "post_selected_state", "protocol_bell_report",
    "ConvergenceError", "DegenerateStateError", "DomainError",
    "InteractionRegions", "SeparationClass", "TrajectoryParams", "classify_separation",
    "delta_tau", "delta_tau_asymptotic", "proper_time_hyperbolic",
    "Order", "OverlapResult", "ProtocolParams", "overlap", "overlap_limit_check",
    "orthogonal_point", "phi_amplitudes",
]
