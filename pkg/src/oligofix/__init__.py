"""Oligopoly equilibria via response-map fixed points.

Library layout:

* ``market``       - demand/cost primitives, profits, derivatives, surplus
* ``responses``    - stage response maps and the composed hierarchical map
* ``solver``       - successive application, contraction certificates, bounds
* ``large_market`` - n-firm closed forms and recursions for four families
* ``reporting``    - run configs, dispatch, CSV/JSON emission
* ``figures``      - comparison figures for the report path
"""

from .errors import (
    ConfigError,
    EvaluationError,
    InvalidConstantsError,
    MaxIterExceededError,
    NoBracketError,
    NumericsError,
)
from .large_market import (
    Family,
    FamilyParams,
    LargeMarketRow,
    RecursionState,
    aggregate_recursion,
    cournot_linear,
    cournot_quadratic,
    equilibrium_row,
    limits_and_gaps,
    ordering_checks,
    residual_sequences,
    share_recursion,
    stackelberg_linear,
    stackelberg_quadratic,
    surplus_row,
)
from .market import (
    DIFF1_DEFAULT,
    DIFF2_DEFAULT,
    CostSpec,
    DemandSpec,
    DiffConfig,
    MarketSpec,
    consumer_surplus,
    diff1,
    diff2,
    marginal_cost,
    own_curvature,
    own_first_order,
    price,
    profit,
    total_surplus,
)
from .responses import (
    InnerSolveConfig,
    MetricBundle,
    OutputTriple,
    ResponseSystem,
    cross_displacement,
    cross_symmetry_holds,
    follower_map,
    hierarchical_map,
    l1_distance,
    leader_map,
    metrics,
    middle_map,
    self_displacement,
    solve_follower,
    solve_middle,
)
from .solver import (
    ContractionReport,
    HardyRogersConstants,
    IterationStatus,
    IterationTrace,
    SecondOrderReport,
    a_posteriori_bound,
    a_priori_bound,
    cournot_second_order,
    estimate_contraction,
    hardy_rogers_rate,
    jacobian3,
    picard_iterate,
    spectral_radius3,
    verify_second_order,
)

__version__ = "0.1.0"
