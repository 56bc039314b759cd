"""Energy-efficient power control game on K carriers with a leader and a follower."""

from .analysis import (
    CoordinationBound,
    RoleEquilibriumMissing,
    WelfareReport,
    leader_prefers_leading,
    nash_no_coordination_probability,
    no_coordination_bound,
    no_coordination_region,
    realized_spectral_efficiency,
    spectral_efficiency_bound,
    welfare_report,
)
from .channel import (
    ChannelRealization,
    GameConfig,
    effective_gain,
    sample_channels,
    sinr,
)
from .efficiency import (
    BetaStar,
    EfficiencyModel,
    GammaStar,
    NoRoot,
    existence_guaranteed,
    solve_beta_star,
    solve_gamma_star,
)
from .equilibrium import (
    Branch,
    EquilibriumOutcome,
    LeaderCandidates,
    OutcomeKind,
    PowerAllocation,
    ZeroPower,
    epsilon_ne_check,
    follower_best_response,
    leader_candidates,
    nash_solve,
    oracle_stackelberg,
    stackelberg_solve,
    utility,
)
from .simulator import SweepResult, SweepSpec, run_se_tradeoff, run_sweep

__version__ = "0.1.0"
