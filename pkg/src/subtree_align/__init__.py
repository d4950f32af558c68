"""Sub-tree similarity message passing for aligning correlated sparse graphs."""
import os

# numba's TBB layer warns on version mismatch; the workqueue layer is always there
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

from .aligner import (  # noqa: E402
    MessageState,
    ScoreMatrix,
    iterate_scores,
    run_mp_er,
    run_mp_general,
    run_mp_weighted,
)
from .ensembles import (  # noqa: E402
    ColoredGraph,
    DegreeTripleLaw,
    ErParams,
    Graph,
    GraphPairInstance,
    WeightModel,
    WeightedEnsemble,
    attach_weights,
    load_pair,
    sample_configuration_correlated,
    sample_correlated_er,
    save_pair,
    size_bias,
)
from .errors import (  # noqa: E402
    AlignError,
    CapacityError,
    ConfigError,
    DataError,
    DegenerateLawError,
    DegenerateRowError,
    GenerationError,
    IncompleteGridError,
    ParameterError,
    ParseError,
)
from .estimators import (  # noqa: E402
    PartialMap,
    RowProbabilities,
    argmax_estimator,
    row_normalize,
    threshold_estimator,
)
from .harness import (  # noqa: E402
    ExperimentConfig,
    SweepResult,
    crossover_line,
    run_experiment,
    select_optimal_depth,
)
from .kernel import log_partial_matching_sum  # noqa: E402
from .metrics import (  # noqa: E402
    estimate_kl,
    estimate_kl_curve,
    exact_kl_depth1,
    hamming_loss,
    it_upper_bound,
    nishimori_check,
    overlap,
    score_diagnostics,
)
from .trees import (  # noqa: E402
    ColoredTree,
    ErTreeLaw,
    GeneralTreeLaw,
    RootedTree,
    likelihood_ratio,
    likelihood_ratio_general,
    project_pair,
    sample_colored_gw,
)

__version__ = "0.1.0"
