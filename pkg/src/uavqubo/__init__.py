"""QUBO formulations and classical annealing samplers for multi-UAV downlink
clustering and resource allocation.

The library builds the distance-based user-clustering QUBO and the joint
sub-channel/power allocation QUBO for a fleet of aerial base stations,
derives penalty factors and the interference scaling parameter, solves with
exhaustive enumeration, steepest descent, or simulated annealing, and scores
the decoded plans with the exact log-rate formula.
"""

from .netmodel import (
    RadioParams,
    Scenario,
    GainMatrix,
    generate_scenario,
    gain_matrix,
    distance_matrix,
    scenario_from_config,
)
from .evaluate import NetworkAssignment, LinkReport, sum_rate, link_reports
from .qubo import (
    QuboModel,
    IsingModel,
    PenaltyEstimate,
    to_ising,
    penalty_exactly_one,
    scale_and_add,
    export_qubo_file,
    import_qubo_file,
)
from .solvers import (
    SampleSet,
    SaSchedule,
    solve_exhaustive,
    solve_steepest_descent,
    solve_sa,
    filter_feasible,
    exhaustive_sampler,
    sd_sampler,
    sa_sampler,
)
from .clustering import (
    ClusterAssignment,
    build_clustering_qubo,
    penalty_bound_clustering,
    clustering_penalty_lower,
    cluster,
    kmeanspp,
    poor_matching_fraction,
)
from .allocation import (
    AllocationVars,
    AllocationPlan,
    FractionalObjective,
    build_allocation_qubo,
    penalty_bound_allocation,
    dinkelbach_solve,
    per_term_scaling,
    decode_allocation,
    plan_to_assignment,
)
from .experiments import (
    ExperimentConfig,
    pipeline,
    sweep,
    report_clustering_table,
    emit_plotdata,
    split_seed,
)

__version__ = "0.1.0"
