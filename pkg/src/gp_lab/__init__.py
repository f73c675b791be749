"""(1+1) GP on ORDER and MAJORITY with drift instrumentation.

Library layout:

* ``gp_core``     - trees, fitness, incremental maintenance
* ``mutation``    - the three-way leaf operator and op-count draws
* ``evolution``   - the (1+1) loop, configs, results
* ``analysis``    - leaf classes, potentials, drift estimation
* ``drift_lab``   - hitting-time bound calculators and chain checks
* ``experiments`` - sweeps, scaling fits, bloat reports, plots
* ``cli``         - the ``gp-lab`` command
"""

from .errors import (
    ConfigError,
    ContractViolation,
    DomainError,
    GpLabError,
    InsufficientSamples,
)
from .gp_core import (
    MAJORITY,
    ORDER,
    GpTree,
    Literal,
    TreeStats,
    format_tree_text,
    majority_fitness,
    order_fitness,
    parse_tree_text,
)
from .mutation import (
    K_CONSTANT_ONE,
    K_ONE_PLUS_POISSON,
    Delete,
    Insert,
    Substitute,
    hvl_prime,
    sample_k,
    sample_operation,
)
from .evolution import Fitness, InitSpec, RunConfig, RunResult, run, select
from .rng import RngStream, derive_seed

__all__ = [
    "ConfigError",
    "ContractViolation",
    "DomainError",
    "GpLabError",
    "InsufficientSamples",
    "MAJORITY",
    "ORDER",
    "GpTree",
    "Literal",
    "TreeStats",
    "format_tree_text",
    "majority_fitness",
    "order_fitness",
    "parse_tree_text",
    "K_CONSTANT_ONE",
    "K_ONE_PLUS_POISSON",
    "Delete",
    "Insert",
    "Substitute",
    "hvl_prime",
    "sample_k",
    "sample_operation",
    "Fitness",
    "InitSpec",
    "RunConfig",
    "RunResult",
    "run",
    "select",
    "RngStream",
    "derive_seed",
]

__version__ = "0.1.0"
