"""k-means++ seeding on a planar bad instance: construction, D^2 sampling,
potential-bound checks, the covering Markov chain, and exhaustive oracles."""

from .chain import (ChainParams, check_inequalities, chain_params, expected_steps,
                    hitting_probability_dp, hoeffding_bound, schedule, simulate_chain,
                    theorem_bound, z_and_p)
from .evaluation import (approximation_ratio, coverage_state, lemma_bound_report,
                         min_covered_for_alpha, potential, split_potential)
from .instance import (Instance, InstanceParams, Location, WeightedPoints, build_instance,
                       group_mass, level_weight, optimal_centers, optimal_cost_closed_form)
from .oracle import brute_force_optimal, exact_seeding_distribution, first_center_distribution
from .rng import RngStream
from .seeding import kmeanspp_seed, lloyd, run_trials, weighted_choice

__version__ = "0.1.0"
