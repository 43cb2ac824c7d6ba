"""Bandits with metric switching costs: metric complexities, HST embeddings and the
Slowly-Moving Bandit policy, plus an experiment harness."""
from .errors import MoveBanditError
from .harness import (
    ExperimentConfig,
    RunTrace,
    discretize_and_run,
    make_loss_oracle,
    movement_regret,
    run,
    run_experiment,
    run_general,
)
from .hst import HstTree, build_hst, check_conditions, reshape_well_behaved, tree_complexity
from .metric import MetricSpace, covering_complexity, make_metric, packing_complexity
from .smb import SMB, Exp3, default_eta

__version__ = "0.1.0"
