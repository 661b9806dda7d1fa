"""Optimal energy-harvest / information-decode scheduling for SWIPT receivers using HARQ-IR."""

from .channel import IID, ChannelProcess, Correlated, steady_state
from .errors import (ConfigError, DegenerateChain, EpisodeCap, InfeasibleChannel,
                     InsufficientEnergy, NoConvergence, OutOfRange, SingularSystem,
                     SwiptHarqError)
from .model import EH, ID, InfoGrid, ReceiverState, SystemParams, split_rates, step
from .policies import make_policy
from .simulate import estimate, oracle_k

__version__ = "0.1.0"

__all__ = [
    "IID", "Correlated", "ChannelProcess", "steady_state",
    "SystemParams", "ReceiverState", "InfoGrid", "EH", "ID", "split_rates", "step",
    "make_policy", "estimate", "oracle_k",
    "SwiptHarqError", "ConfigError", "DegenerateChain", "EpisodeCap", "InfeasibleChannel",
    "InsufficientEnergy", "NoConvergence", "OutOfRange", "SingularSystem",
]
