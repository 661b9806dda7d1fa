"""Decision rules: the solved optimal tables, the BF/IF/CT family, Bernoulli and simple ARQ.

Every HARQ rule harvests when the battery is empty or the message is fully
buffered and decodes information once the battery exceeds ``E_d``; they
differ only on the interior ``1 <= b <= E_d, m < R1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Union

import numpy as np

from .errors import ConfigError, InsufficientEnergy
from .model import ReceiverState, SystemParams
from .solver_iid import DecisionTable
from .solver_corr import DecisionTable3D


class Decision(IntEnum):
    ID = 0
    EH = 1
    ATTEMPT = 2  # simple ARQ: sample the slot and decode only if it was GOOD


class Policy:
    name = "policy"

    def decide(self, state: ReceiverState, params: SystemParams,
               rng: Optional[np.random.Generator] = None) -> Decision:
        b, u = _discretize(state, params)
        dist = self.distribution(b, u, state.G, params)
        if len(dist) == 1:
            return dist[0][0]
        if rng is None:
            raise ConfigError(f"{self.name} is randomized and needs an rng")
        return dist[0][0] if rng.random() < dist[0][1] else dist[1][0]

    def distribution(self, b: int, u: int, G: Optional[int],
                     params: SystemParams) -> list[tuple[Decision, float]]:
        """Action probabilities at a grid state, largest-probability-first not guaranteed."""
        raise NotImplementedError

    def batch(self, b: np.ndarray, u: np.ndarray, G: Optional[np.ndarray],
              params: SystemParams, rng: np.random.Generator) -> np.ndarray:
        """Vectorized ``decide`` over arrays of grid states; returns Decision codes."""
        raise NotImplementedError


def _discretize(state: ReceiverState, params: SystemParams) -> tuple[int, int]:
    return int(np.floor(state.b + 1e-12)), params.grid.index(state.m)


class _Harq(Policy):
    """Shared structure: forced EH on ``b < 1`` or full buffer, forced ID above ``E_d``."""

    def interior_harvest_prob(self, b: int, params: SystemParams) -> float:
        raise NotImplementedError

    def distribution(self, b, u, G, params):
        n = params.grid.n_units
        if b < 1 or u >= n:
            return [(Decision.EH, 1.0)]
        if b >= params.E_d + 1:
            return [(Decision.ID, 1.0)]
        p = self.interior_harvest_prob(b, params)
        if p >= 1.0:
            return [(Decision.EH, 1.0)]
        if p <= 0.0:
            return [(Decision.ID, 1.0)]
        return [(Decision.EH, p), (Decision.ID, 1.0 - p)]

    def _interior_batch(self, b, params, rng) -> np.ndarray:
        raise NotImplementedError

    def batch(self, b, u, G, params, rng):
        n = params.grid.n_units
        out = np.where(self._interior_batch(b, params, rng), Decision.EH, Decision.ID).astype(np.int8)
        out[(b < 1) | (u >= n)] = Decision.EH
        out[(b >= params.E_d + 1) & (u < n)] = Decision.ID
        return out


@dataclass(frozen=True)
class BatteryFirst(_Harq):
    """Harvest until the battery reaches ``E_d``, then collect information."""

    name = "bf"

    def interior_harvest_prob(self, b, params):
        return 1.0 if b < params.E_d else 0.0

    def _interior_batch(self, b, params, rng):
        return b < params.E_d


@dataclass(frozen=True)
class InformationFirst(_Harq):
    name = "if"

    def interior_harvest_prob(self, b, params):
        return 0.0

    def _interior_batch(self, b, params, rng):
        return np.zeros(b.shape, dtype=bool)


@dataclass(frozen=True)
class Bernoulli(_Harq):
    """Harvest with probability ``p`` on the interior."""

    p: float = 0.1
    name = "bernoulli"

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"Bernoulli p must lie in [0, 1], got {self.p}")

    def interior_harvest_prob(self, b, params):
        return self.p

    def _interior_batch(self, b, params, rng):
        return rng.random(b.shape[0]) < self.p


@dataclass(frozen=True)
class CoinToss(Bernoulli):
    p: float = 0.5
    name = "ct"


@dataclass(frozen=True)
class Optimal(Policy):
    """Follow a solved decision table; ties act as ID."""

    table: Union[DecisionTable, DecisionTable3D]
    name = "optimal"

    def _is3d(self) -> bool:
        return isinstance(self.table, DecisionTable3D)

    def distribution(self, b, u, G, params):
        if self._is3d():
            if G is None:
                raise ConfigError("the correlated optimal policy needs the previous channel state")
            eh = self.table.harvest(b, u, G)
        else:
            eh = self.table.harvest(b, u)
        if b < 1 and not eh:
            raise InsufficientEnergy(f"table chose ID at empty battery (b={b}, u={u})")
        return [(Decision.EH if eh else Decision.ID, 1.0)]

    def batch(self, b, u, G, params, rng):
        bb = np.minimum(b, self.table.b_max)
        if self._is3d():
            if G is None:
                raise ConfigError("the correlated optimal policy needs the previous channel state")
            codes = self.table.rho_star[bb, u, G]
        else:
            codes = self.table.rho_star[bb, u]
        return np.where(codes == Decision.EH, Decision.EH, Decision.ID).astype(np.int8)


@dataclass(frozen=True)
class SimpleARQ(Policy):
    """Harvest up to ``E_d + 1`` units, then sample one slot and decode only if it was GOOD."""

    name = "arq"

    def distribution(self, b, u, G, params):
        if b >= params.E_d + 1:
            return [(Decision.ATTEMPT, 1.0)]
        return [(Decision.EH, 1.0)]

    def batch(self, b, u, G, params, rng):
        return np.where(b >= params.E_d + 1, Decision.ATTEMPT, Decision.EH).astype(np.int8)


@dataclass(frozen=True)
class ArqOutcome:
    success: bool
    state: Optional[ReceiverState] = None


def simple_arq_attempt(state: ReceiverState, g: int, params: SystemParams) -> ArqOutcome:
    """One simple-ARQ decode slot: sampling costs a unit; a BAD slot drops the packet."""
    if state.b < params.E_d + 1:
        raise InsufficientEnergy(f"an attempt needs E_d + 1 = {params.E_d + 1} units, battery holds {state.b}")
    if g == 1:
        return ArqOutcome(True)
    G = g if params.correlated else state.G
    return ArqOutcome(False, ReceiverState(state.b - 1, 0.0, G))


BASELINES = ("bf", "if", "ct", "bernoulli", "arq")


def make_policy(name: str, params: SystemParams, p: float = 0.1, table=None) -> Policy:
    """Build a policy by its CLI name; ``optimal`` solves the table unless one is given."""
    name = name.lower()
    if name == "optimal":
        if table is None:
            from . import solver_corr, solver_iid
            table = (solver_corr if params.correlated else solver_iid).solve(params)
        return Optimal(table)
    simple = {"bf": BatteryFirst, "if": InformationFirst, "ct": CoinToss, "arq": SimpleARQ}
    if name in simple:
        return simple[name]()
    if name == "bernoulli":
        return Bernoulli(p)
    raise ConfigError(f"unknown policy {name!r}; choose from optimal, {', '.join(BASELINES)}")
