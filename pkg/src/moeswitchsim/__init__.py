"""Flit-level discrete-event simulator of switch-resident reduction and
dynamic multicast for MoE dispatch/combine on a multi-GPU node."""

__version__ = "0.1.0"

from .config import (  # noqa: F401
    ComputeConfig,
    ConfigError,
    DistConfig,
    ExperimentSpec,
    METHODS,
    ModelConfig,
    RunConfig,
    SweepConfig,
    SystemConfig,
    parse_config,
)
from .engine import RngStreams, Simulator, SimError, stable_hash64  # noqa: F401
