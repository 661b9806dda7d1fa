"""Two-state channel processes: i.i.d. and Gilbert-Elliott (first-order Markov).

State 1 is GOOD, state 0 is BAD.  For the correlated model ``lam0`` is
``Pr[G_t = 1 | G_{t-1} = 0]`` and ``lam1`` is ``Pr[G_t = 1 | G_{t-1} = 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError, DegenerateChain


def _check_prob(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must be a probability in [0, 1], got {value!r}")


@dataclass(frozen=True)
class IID:
    lam: float

    def __post_init__(self) -> None:
        _check_prob("lambda", self.lam)

    def p_good(self, prev: int | None = None) -> float:
        return self.lam

    @property
    def lam0(self) -> float:
        return self.lam

    @property
    def lam1(self) -> float:
        return self.lam


@dataclass(frozen=True)
class Correlated:
    lam0: float
    lam1: float

    def __post_init__(self) -> None:
        _check_prob("lambda0", self.lam0)
        _check_prob("lambda1", self.lam1)

    def p_good(self, prev: int | None) -> float:
        if prev is None:
            raise ConfigError("correlated channel needs the previous channel state")
        return self.lam1 if prev == 1 else self.lam0


ChannelModel = Union[IID, Correlated]


def steady_state(lam0: float, lam1: float) -> tuple[float, float]:
    """Stationary law ``(phi0, phi1)`` of the two-state chain.

    Raises DegenerateChain for the reducible case (``lam0=0, lam1=1``) and the
    periodic case (``lam0=1, lam1=0``).
    """
    _check_prob("lambda0", lam0)
    _check_prob("lambda1", lam1)
    if lam0 == 0.0 and lam1 == 1.0:
        raise DegenerateChain("both channel states are absorbing (lambda0=0, lambda1=1)")
    if lam0 == 1.0 and lam1 == 0.0:
        raise DegenerateChain("channel alternates deterministically (lambda0=1, lambda1=0)")
    phi0 = (1.0 - lam1) / (1.0 + lam0 - lam1)
    return phi0, 1.0 - phi0


def stationary_good(channel: ChannelModel) -> float:
    if isinstance(channel, IID):
        return channel.lam
    return steady_state(channel.lam0, channel.lam1)[1]


class ChannelProcess:
    """Stateful channel-state generator driven by a numpy ``Generator``.

    ``current`` is the state of the most recent slot.  For the i.i.d. model it
    is tracked but does not influence the next draw.
    """

    def __init__(self, model: ChannelModel, rng: np.random.Generator, current: int | None = None):
        self.model = model
        self.rng = rng
        if current is None:
            current = int(rng.random() < stationary_good(model))
        if current not in (0, 1):
            raise ConfigError(f"channel state must be 0 or 1, got {current!r}")
        self.current = current

    def next(self) -> int:
        p = self.model.p_good(self.current)
        self.current = int(self.rng.random() < p)
        return self.current

    def trajectory(self, steps: int) -> np.ndarray:
        out = np.empty(steps, dtype=np.int8)
        for t in range(steps):
            out[t] = self.next()
        return out
