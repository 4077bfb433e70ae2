"""Dynamic weighted max-min fairness and DRF across epochs, in exact arithmetic.

Quick start::

    from dynfair import gen_example_10_9, incentive_ratio
    inst = gen_example_10_9()
    incentive_ratio(inst.scenario, inst.deviation).max_ratio   # Fraction(10, 9)
"""

from __future__ import annotations

from .allocator import (
    EpochAllocation,
    EpochInput,
    InfeasibleFloors,
    allocate_epoch,
    check_bottleneck_optimality,
    progressive_fill,
)
from .engine import Trace, run, trace_to_csv
from .instances import (
    GeneratedInstance,
    RandomConfig,
    gen_example_10_9,
    gen_multi_lower,
    gen_sqrt2,
    gen_two_user_sketch,
    gen_zero_ratio_overreport,
    random_scenario,
)
from .model import (
    UNBOUNDED,
    ReportProfile,
    Scenario,
    ScenarioError,
    UserEpochType,
    guarantee,
    normalize_capacities,
    validate_profile,
    validate_scenario,
)
from .properties import (
    PropertyReport,
    check_envy_freeness,
    check_more_less,
    check_no_overreport,
    check_pareto,
    check_sharing_incentives,
    check_upper_bounds,
    rho,
)
from .serialize import dumps_profile, dumps_scenario, loads_profile, loads_scenario
from .strategy import (
    DeviationOutcome,
    SearchConfig,
    incentive_ratio,
    interval_analysis,
    search_best_deviation,
    search_overreport,
)

__version__ = "0.1.0"
