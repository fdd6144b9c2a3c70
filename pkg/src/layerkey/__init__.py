"""Secret-key rates for layered-broadcast key generation over slow fading.

The public surface re-exports the working set: gain laws, power profiles,
rate functionals, the finite-state simulator, and the scalar numerics they
are built on.
"""

from .channels import (
    ChannelPair,
    Constant,
    Rayleigh,
    Tabulated,
    eval_cdf,
    eval_pdf,
    inverse_cdf,
    sample,
    sample_many,
    tabulated_from_csv,
)
from .errors import (
    DegenerateProfile,
    DimensionMismatch,
    DomainError,
    InstanceTooLarge,
    MaxIterExceeded,
    NoBracket,
    NonFiniteIntegrand,
    NonFiniteValue,
    ProfileNonMonotone,
)
from .key_rate import (
    KeyRateReport,
    RewardSample,
    delta_reward,
    rate_density_form,
    rate_full_csit,
    rate_optimal_rayleigh,
    rate_reward_average,
    rate_single_level,
    reward_montecarlo,
    single_level_objective,
)
from .lstate_sim import (
    LayerAllocation,
    LStateChannel,
    ProtocolOutcome,
    average_decodable_rate,
    discretize_profile,
    finite_state_key_rate,
    layer_rates,
    run_protocol,
    simulate_rewards,
    toy_equivocation,
)
from .numerics import (
    Tolerance,
    differentiate,
    exp_integral_e1,
    exp_integral_e1_scaled,
    find_root,
    integrate,
    maximize_scalar,
)
from .power_allocation import (
    EulerResidualReport,
    PowerProfile,
    custom_profile,
    density_center_of_mass,
    euler_residual,
    general_profile,
    nonfading_eve_profile,
    nonsecret_profile,
    rayleigh_condition_gap,
    single_level_profile,
    solve_rayleigh_profile,
    solve_x0,
    solve_x1,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
