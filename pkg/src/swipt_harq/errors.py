"""Exception types raised across the package."""


class SwiptHarqError(Exception):
    """Base class for all package errors."""


class ConfigError(SwiptHarqError, ValueError):
    """Invalid system parameters or experiment configuration."""


class InsufficientEnergy(SwiptHarqError):
    """An action needs one energy unit to run the transceiver but the battery is empty."""


class InfeasibleChannel(SwiptHarqError):
    """The channel can never be GOOD, so no energy ever arrives."""


class DegenerateChain(SwiptHarqError):
    """Two-state channel chain is reducible or periodic; no unique stationary law."""


class OutOfRange(SwiptHarqError, IndexError):
    """A lookup addressed a state outside the materialized table."""


class NoConvergence(SwiptHarqError):
    """Value iteration exhausted its sweep budget above tolerance."""


class EpisodeCap(SwiptHarqError):
    """A simulated episode hit the slot cap without decoding."""


class SingularSystem(SwiptHarqError):
    """The transient-state system (I - Q) k = 1 has no unique solution."""
