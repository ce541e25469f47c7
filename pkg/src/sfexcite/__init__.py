"""Space-filling excitation signal design for nonlinear system identification.

Designs input signals by receding-horizon minimization of a nearest-neighbor
space-filling criterion over a surrogate model's regressor space, and
evaluates the resulting data distributions against baseline generators.
"""

from .baselines import AprbsConfig, aprbs, multisine
from .core import (
    ConfigurationError,
    Dataset,
    DatasetOrigin,
    InitialState,
    NarxConfig,
    Region,
    build_regressors,
)
from .criterion import NnCache, cache_commit, criterion_value
from .designer import (
    DesignMode,
    DesignRun,
    DesignerConfig,
    DesignerError,
    HorizonContext,
    design,
    optimize_horizon,
)
from .harness import (
    ExperimentConfig,
    MetricsReport,
    emit_plotdata,
    load_config,
    run_experiment,
)
from .metrics import (
    EvaluationSet,
    evaluation_set,
    jsd_to_uniform,
    largest_ball_radius,
    radius_progress,
    score_design,
)
from .process import (
    Plant,
    SimulationDivergedError,
    hammerstein_nonlinearity,
    hammerstein_plant,
    hammerstein_step,
    simulate,
)
from .sampling import SupportingSet, default_n_psi, sobol, supporting_set
from .surrogate import (
    LagState,
    Lolimot,
    LtiFirstOrder,
    Surrogate,
    lolimot_fit,
    lolimot_update,
    lti_from_time_constant,
    rollout,
    rollout_jacobian,
)

__version__ = "0.1.0"
