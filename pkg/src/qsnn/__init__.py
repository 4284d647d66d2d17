"""Quantum stochastic neural network: a Lindblad quantum-walk sequence classifier."""
from .network import Params, Topology, classify, encode_input, forward
from .training import TrainConfig, TrainingHistory, evaluate, gradient, loss, robustness, train

__all__ = [
    "Params", "Topology", "classify", "encode_input", "forward",
    "TrainConfig", "TrainingHistory", "evaluate", "gradient", "loss", "robustness", "train",
]
