"""Influence maximization under the linear threshold diffusion model.

Library surface: graph construction and generators, the cascade engine,
classical baseline selectors, a message-passing Q-network with training
loop, budgeted inference, and checkpoint I/O. The `ltimax` console script
exposes the same functionality as subcommands.
"""

from .graphs import (GeneratorConfig, Graph, LoadReport, generate,
                     load_edge_list, node_feature, node_features,
                     normalize_weights, save_edge_list)
from .diffusion import (CascadeState, SpreadEstimate, ThresholdRealization,
                        estimate_spread, exact_spread, sample_realization,
                        simulate, simulate_incremental)
from .heuristics import (SeedSet, select_degree_discount, select_greedy_celf,
                         select_high_degree, select_random)
from .encoder import (EmbeddingTable, EncoderParams, encode, encode_backward,
                      init_encoder_params)
from .qnet import (AdamState, DecoderParams, Experience, QNetParams,
                   ReplayBuffer, loss_and_gradients, q_values, reward,
                   sync_target, td_target)
from .trainer import (EpisodeTrace, TrainConfig, TrainResult,
                      assemble_experiences, build_validation_set,
                      compute_return, greedy_rollout, run_episode, train)
from .inference import (EvaluationReport, InferenceConfig, StepSnapshot,
                        evaluate_solution, select_seeds)
from .checkpoint import CheckpointData, load_checkpoint, save_checkpoint

__version__ = "0.1.0"

__all__ = [
    "AdamState", "CascadeState", "CheckpointData", "DecoderParams",
    "EmbeddingTable", "EncoderParams", "EpisodeTrace", "EvaluationReport",
    "Experience", "GeneratorConfig", "Graph", "InferenceConfig",
    "LoadReport", "QNetParams", "ReplayBuffer", "SeedSet", "SpreadEstimate",
    "StepSnapshot", "ThresholdRealization", "TrainConfig", "TrainResult",
    "assemble_experiences", "build_validation_set", "compute_return",
    "encode", "encode_backward", "estimate_spread", "evaluate_solution",
    "exact_spread", "generate", "greedy_rollout", "init_encoder_params",
    "load_checkpoint", "load_edge_list", "loss_and_gradients",
    "node_feature", "node_features", "normalize_weights", "q_values",
    "reward", "run_episode", "sample_realization", "save_checkpoint",
    "save_edge_list", "select_degree_discount", "select_greedy_celf",
    "select_high_degree", "select_random", "select_seeds", "simulate",
    "simulate_incremental", "sync_target", "td_target", "train",
]
