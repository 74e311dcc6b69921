from .gain import pipeline_gain
from .gossip import estimate_n_gossip
from .loop import (
    DropoutConfig,
    FederationState,
    RoundMetrics,
    RunConfig,
    decavg,
    rounds_to_loss,
    run_round,
    run_rounds,
)
from .partition import Partition, partition, zipf_proportions

__all__ = [
    "DropoutConfig", "FederationState", "Partition", "RoundMetrics",
    "RunConfig", "decavg", "estimate_n_gossip", "partition",
    "pipeline_gain", "rounds_to_loss", "run_round", "run_rounds",
    "zipf_proportions",
]
