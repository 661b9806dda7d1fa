"""Link parameters, receiver state and per-slot dynamics.

The receiver state is ``(b, m)`` (battery units, accumulated bits) and, on
a correlated channel, also ``G``, the channel state of the previous slot.
An action is the power-split ratio ``rho``: ``rho = 1`` routes the whole
signal to the harvester, ``rho = 0`` to the information decoder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .channel import IID, ChannelModel, Correlated
from .errors import ConfigError, InsufficientEnergy

EH = 1.0
ID = 0.0

_RATE_TOL = 1e-12
_GRID_EPS = 1e-9


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of the link.

    Rates are in bits/slot.  ``R1`` doubles as the message encoding rate.
    When ``P``, ``g0`` and ``g1`` are all given the rates follow from the
    Shannon formula; explicitly passed rates must agree with them.
    """

    E_d: int
    e: int
    R0: Optional[float] = None
    R1: Optional[float] = None
    channel: ChannelModel = field(default_factory=lambda: IID(0.5))
    P: Optional[float] = None
    g0: Optional[float] = None
    g1: Optional[float] = None

    def __post_init__(self) -> None:
        link = (self.P, self.g0, self.g1)
        if any(v is not None for v in link):
            if any(v is None for v in link):
                raise ConfigError("P, g0 and g1 must be given together")
            if min(link) <= 0:
                raise ConfigError("P, g0 and g1 must be positive")
            r1 = math.log2(1.0 + self.P * self.g1)
            r0 = math.log2(1.0 + self.P * self.g0)
            for name, given, derived in (("R1", self.R1, r1), ("R0", self.R0, r0)):
                if given is None:
                    object.__setattr__(self, name, derived)
                elif abs(given - derived) > _RATE_TOL:
                    raise ConfigError(f"{name}={given} disagrees with log2(1+P*g)={derived}")
        if self.R0 is None or self.R1 is None:
            raise ConfigError("R0 and R1 are required (or P, g0, g1)")
        if isinstance(self.E_d, bool) or int(self.E_d) != self.E_d or self.E_d < 1:
            raise ConfigError(f"E_d must be an integer >= 1, got {self.E_d!r}")
        if isinstance(self.e, bool) or int(self.e) != self.e or self.e < 1:
            raise ConfigError(f"e must be an integer >= 1, got {self.e!r}")
        object.__setattr__(self, "E_d", int(self.E_d))
        object.__setattr__(self, "e", int(self.e))
        if not (0 < self.R0 <= self.R1) or not math.isfinite(self.R1):
            raise ConfigError(f"need 0 < R0 <= R1, got R0={self.R0}, R1={self.R1}")
        if not isinstance(self.channel, (IID, Correlated)):
            raise ConfigError(f"unknown channel model {self.channel!r}")

    @property
    def correlated(self) -> bool:
        return isinstance(self.channel, Correlated)

    @property
    def grid(self) -> "InfoGrid":
        return InfoGrid.for_rates(self.R0, self.R1)

    def with_channel(self, channel: ChannelModel) -> "SystemParams":
        return SystemParams(self.E_d, self.e, self.R0, self.R1, channel)


@dataclass(frozen=True)
class InfoGrid:
    """Information levels reachable with no-split actions: ``0, R0, 2 R0, ...`` capped at ``R1``."""

    R0: float
    R1: float
    n_units: int

    @classmethod
    def for_rates(cls, R0: float, R1: float) -> "InfoGrid":
        return cls(R0, R1, max(1, math.ceil(R1 / R0 - _GRID_EPS)))

    @property
    def levels(self) -> tuple[float, ...]:
        return tuple(min(u * self.R0, self.R1) for u in range(self.n_units)) + (self.R1,)

    def level(self, u: int) -> float:
        return self.R1 if u >= self.n_units else u * self.R0

    def index(self, m: float) -> int:
        """Grid index equivalent to ``m`` bits for all future no-split dynamics.

        Off-grid amounts map to the level needing the same number of BAD-slot
        receptions to reach ``R1``, which is the highest level not above ``m``.
        """
        remaining = math.ceil((self.R1 - m) / self.R0 - _GRID_EPS)
        return self.n_units - min(max(remaining, 0), self.n_units)


@dataclass(frozen=True)
class ReceiverState:
    b: float
    m: float
    G: Optional[int] = None


def split_rates(rho: float, params: SystemParams) -> tuple[float, float]:
    """Bits accumulated in a BAD and a GOOD slot when a fraction ``rho`` is harvested.

    Returns ``(R_low, R_high)``.
    """
    r_low = math.log2(rho + (1.0 - rho) * 2.0 ** params.R0)
    r_high = math.log2(rho + (1.0 - rho) * 2.0 ** params.R1)
    return r_low, r_high


def _check_action(state: ReceiverState, rho: float) -> None:
    if not 0.0 <= rho <= 1.0:
        raise ConfigError(f"split ratio must lie in [0, 1], got {rho!r}")
    if rho != 1 and state.b < 1:
        raise InsufficientEnergy(f"rho={rho} needs one energy unit, battery holds {state.b}")


def step(state: ReceiverState, rho: float, g: int, params: SystemParams) -> ReceiverState:
    """Deterministic slot update given the realized channel state ``g``."""
    _check_action(state, rho)
    if rho == 1:
        b = state.b + params.e * g
        m = state.m
    else:
        b = state.b - 1 + rho * params.e * g
        if rho == 0:
            gained = params.R1 if g else params.R0
        else:
            r_low, r_high = split_rates(rho, params)
            gained = r_high if g else r_low
        m = min(state.m + gained, params.R1)
    new_g = g if params.correlated else state.G
    return ReceiverState(b, m, new_g)


def is_absorbing(state: ReceiverState, params: SystemParams) -> bool:
    return state.b >= params.E_d and state.m >= params.R1


def transition_kernel(
    state: ReceiverState, rho: float, params: SystemParams
) -> list[tuple[ReceiverState, float]]:
    """Successor distribution for one slot, GOOD outcome first.

    Both outcomes are merged into one entry when they coincide.
    """
    _check_action(state, rho)
    if params.correlated and state.G is None:
        raise ConfigError("correlated channel needs the previous channel state G")
    p = params.channel.p_good(state.G)
    good = step(state, rho, 1, params)
    bad = step(state, rho, 0, params)
    if good == bad:
        return [(good, 1.0)]
    return [(good, p), (bad, 1.0 - p)]
