"""Antichains, flows and containers in the hypergrid [t]^n."""

from .grid import GridShape, GuardError, good_levels, level_sizes, width
from .flows import AveragedFlow, StructuredFlow, edge_weight, max_good_weight, verify_conservation
from .chains import ChainSampler, interval_mass, pair_bound_check, pair_probability, sample_chain
from .saturation import (check_rectangle_saturation, check_strong_saturation, minimum_chain_cover,
                         rectangle_partition, uniform_chain_partition)
from .containers import run_container, verify_container_properties
from .counting import bound_report, count_antichains_exact, count_antichains_upto, lower_bound_construction
from .analytics import density, lambda_ratio, solve_tilt

__all__ = [
    "GridShape", "GuardError", "good_levels", "level_sizes", "width",
    "AveragedFlow", "StructuredFlow", "edge_weight", "max_good_weight", "verify_conservation",
    "ChainSampler", "interval_mass", "pair_bound_check", "pair_probability", "sample_chain",
    "check_rectangle_saturation", "check_strong_saturation", "minimum_chain_cover",
    "rectangle_partition", "uniform_chain_partition",
    "run_container", "verify_container_properties",
    "bound_report", "count_antichains_exact", "count_antichains_upto", "lower_bound_construction",
    "density", "lambda_ratio", "solve_tilt",
]
__version__ = "0.1.0"
