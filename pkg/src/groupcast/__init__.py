"""Reciprocal local content sharing under lossy broadcast downlinks.

Closed-form completion times and sharing optima (`analytics`), the
three-user sharing LP (`sharing_lp`, `simplex`), a Monte Carlo oracle
(`simulate`), the virtual queueing network and back-pressure schedulers
for streaming arrivals (`virtual_network`, `scheduler`), and an
experiment CLI (`cli`).
"""

__version__ = "0.1.0"

from .analytics import (  # noqa: F401
    CompletionTimes,
    UtilityBreakdown,
    asym_two_user,
    improvement_ratio_identify,
    improvement_ratio_social,
    markov_two_symmetric,
    optimal_share_prob_asym,
    stability_bounds_two_symmetric,
    t_eq_asym,
    t_eq_n_symmetric,
    t_eq_two_symmetric,
    t_neq_two_symmetric,
    t_union_n_symmetric,
    t_union_two_symmetric,
    unreliable_local_two_symmetric,
    utility_n_symmetric,
)
from .channels import D2dChannel, IidChannel, MarkovChannel, markov_steady_state, sample_state, state_probability  # noqa: F401
from .scheduler import DynamicConfig, DynamicReport, estimate_stability_boundary, run_dynamic  # noqa: F401
from .sharing_lp import build_three_user_lp, grouping_compare, solve_three_user  # noqa: F401
from .simplex import LinearProgram, LpSolution, solve_lp  # noqa: F401
from .simulate import (  # noqa: F401
    DisseminationConfig,
    measure_reciprocity,
    named_policy,
    simulate_completion,
    simulate_utility,
)
from .virtual_network import VirtualNetwork, build  # noqa: F401
