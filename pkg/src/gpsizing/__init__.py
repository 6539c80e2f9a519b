"""Decision-making population sizing for tree GP.

Subpackages by concern:

* trees          — program trees, initialization, analytic size theory
* problems       — the three model problems and their expression semantics
* engine         — the selecto-recombinative GP loop
* combinatorics  — exact expressed-block distribution and its oracle
* sizing         — every population-sizing formula plus the confidence
                   coefficient
* harness        — bisection for minimal population size, sweeps, CSV, fits
* cli            — the `gpsizing` command
"""

from .combinatorics import (
    ExpressionDistribution,
    mean_var_expressed,
    n_total,
    oracle_enumerate,
    prob_expressed,
    q_bar_order,
    ways_expressed,
)
from .engine import (
    GPConfig,
    RunStats,
    crossover_at,
    evolve,
    subtree_crossover,
    success_trial,
    tournament_select,
)
from .harness import (
    BisectionConfig,
    SweepRecord,
    bisect_min_popsize,
    bisect_threshold,
    fit_loglog_slope,
    sweep,
)
from .problems import (
    Direction,
    Evaluation,
    LoudProblem,
    OnOffProblem,
    OrderProblem,
    express_onoff,
    express_order,
    fitness_loud,
    fitness_onoff,
    fitness_order,
    kolmogorov_size,
    make_problem,
)
from .rng import SeededRng
from .sizing import (
    CMethod,
    SizingInputs,
    c_from_alpha,
    decision_probability,
    ga_popsize,
    gp_popsize_general,
    gp_popsize_kolmogorov,
    loud_popsize,
    onoff_popsize,
    order_p_expr,
    order_popsize,
    supply_popsize,
    trials_per_bb,
)
from .trees import (
    InitConfig,
    InitMethod,
    PrimitiveSet,
    ProgramTree,
    TreeFragment,
    avg_size_full_analytic,
    avg_size_grow_analytic,
    competition_size,
    create_ramped_population,
    create_tree_full,
    create_tree_grow,
    fragment_quantity,
    tree_from_sexpr,
    tree_statistics,
)

__version__ = "0.1.0"
