"""Monte Carlo engine for killed subordinate Brownian motions and jump processes."""
from .engine import MCEstimate, PathBatch, PathConfig, run_paths
from .estimators import (KilledPath, ball_volume, estimate_exit_time, estimate_green,
                         estimate_lambda1, estimate_pD, estimate_survival, green_from_batch,
                         lambda1_from_batch, pD_from_batch, simulate_killed_path,
                         survival_from_batch)
from .samplers import sample_stable_subordinator, sample_subordinator

__all__ = [
    "MCEstimate", "PathBatch", "PathConfig", "run_paths", "KilledPath", "ball_volume",
    "estimate_exit_time", "estimate_green", "estimate_lambda1", "estimate_pD",
    "estimate_survival", "green_from_batch", "lambda1_from_batch", "pD_from_batch",
    "simulate_killed_path", "survival_from_batch", "sample_stable_subordinator",
    "sample_subordinator",
]
