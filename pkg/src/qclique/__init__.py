"""Clique and independent-set problems for quantum channels at desk scale."""

from .channel_ops import (BlockSumChannel, CircuitChannel, EBChannel, KrausChannel, output_overlap)
from .circuit_model import Circuit, Gate, evaluate, load_circuit
from .clique_engine import CliqueCertificate, brute_force_value, max_clique_value, min_is_value
from .config import settings
from .tensor_core import DensityOperator, PureState

__version__ = "0.1.0"

__all__ = ["BlockSumChannel", "CircuitChannel", "EBChannel", "KrausChannel", "output_overlap",
           "Circuit", "Gate", "evaluate", "load_circuit", "CliqueCertificate", "brute_force_value",
           "max_clique_value", "min_is_value", "settings", "DensityOperator", "PureState"]
