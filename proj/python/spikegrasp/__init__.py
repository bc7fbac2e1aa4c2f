"""Spiking actor-critic grasping: neurons, encoders, energy model and training."""

from ._spikegrasp import (
    ActorCritic,
    ConfigError,
    Error,
    ExperimentConfig,
    ann_energy_pj,
    evaluate,
    input_spike_rate,
    latency_encode,
    latency_spike_time,
    lif_step,
    load_checkpoint,
    load_config,
    membrane_activation_rate,
    minmax_normalize,
    parse_config,
    perfect_grasp_reward,
    reference_energy,
    snn_energy_pj,
    train,
    unroll,
)

__all__ = [
    "ActorCritic",
    "ConfigError",
    "Error",
    "ExperimentConfig",
    "ann_energy_pj",
    "evaluate",
    "input_spike_rate",
    "latency_encode",
    "latency_spike_time",
    "lif_step",
    "load_checkpoint",
    "load_config",
    "membrane_activation_rate",
    "minmax_normalize",
    "parse_config",
    "perfect_grasp_reward",
    "reference_energy",
    "snn_energy_pj",
    "train",
    "unroll",
]
