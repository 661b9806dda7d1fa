"""Minimum mean time to absorption under a Gilbert-Elliott channel.

The state gains the previous channel state ``G``.  Per ``(b, u)`` the G=0
slice is finalized first because harvesting from ``(b, u, 1)`` can fall back
to ``(b, u, 0)`` on a BAD slot:

    k_id(b,u,G) = 1 + lam_G k(b-1, n, 1) + (1-lam_G) k(b-1, u+1, 0)
    k_eh(b,u,0) = 1/lam0 + k(b+e, u, 1)
    k_eh(b,u,1) = 1 + lam1 k(b+e, u, 1) + (1-lam1) k(b, u, 0)
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO

import numpy as np

from .channel import Correlated, steady_state
from .errors import ConfigError, InfeasibleChannel, OutOfRange
from .model import SystemParams
from .solver_iid import Choice, _fmt, _Table, classify


def _lambdas(params: SystemParams) -> tuple[float, float]:
    if not isinstance(params.channel, Correlated):
        raise ConfigError("this solver handles the correlated channel only")
    return params.channel.lam0, params.channel.lam1


def lemma3_k(b: float, G: int, params: SystemParams) -> float:
    """Closed form at ``(b, R1, G)`` for ``b < E_d``."""
    lam0, lam1 = _lambdas(params)
    if lam0 == 0:
        raise InfeasibleChannel("lambda0 = 0: a BAD channel never recovers")
    if not 0 <= b < params.E_d:
        raise OutOfRange(f"closed form covers 0 <= b < E_d, got b={b}")
    i = math.ceil((params.E_d - b) / params.e)
    cycle = (1.0 + lam0 - lam1) / lam0
    if G == 1:
        return i * cycle
    return 1.0 / lam0 + (i - 1) * cycle


def boundary_k(j: int, G: int, params: SystemParams) -> float:
    """Closed form on the diagonal ``(E_d+j, R1 - j R0, G)`` and above it in ``b``."""
    lam0, lam1 = _lambdas(params)
    if j < 1:
        raise OutOfRange(f"j must be >= 1, got {j}")
    if G == 0:
        return sum((1.0 - lam0) ** (i - 1) for i in range(1, j + 1))
    if j == 1:
        return 1.0
    return 1.0 + (1.0 - lam1) * sum((1.0 - lam0) ** (i - 1) for i in range(1, j))


@dataclass(frozen=True)
class DecisionTable3D:
    """Solved correlated table; arrays are indexed ``[b, u, G]``."""

    params: SystemParams
    k_star: np.ndarray
    k_id: np.ndarray
    k_eh: np.ndarray
    rho_star: np.ndarray

    @property
    def b_max(self) -> int:
        return self.k_star.shape[0] - 1

    @property
    def n_units(self) -> int:
        return self.k_star.shape[1] - 1

    def k(self, b: int, u: int, G: int) -> float:
        if b < 0 or not 0 <= u <= self.n_units or G not in (0, 1):
            raise OutOfRange(f"state (b={b}, u={u}, G={G}) is outside the table")
        return float(self.k_star[min(b, self.b_max), u, G])

    def choice(self, b: int, u: int, G: int) -> Choice:
        return Choice(int(self.rho_star[min(b, self.b_max), u, G]))

    def harvest(self, b: int, u: int, G: int) -> bool:
        return self.choice(b, u, G) is Choice.EH

    def value_at(self, b: float, m: float, G: int) -> float:
        return self.k(int(math.floor(b + 1e-12)), self.params.grid.index(m), G)

    def averaged(self, b: int = 0, u: int = 0) -> float:
        """Value at ``(b, u)`` averaged over the stationary law of the previous channel state."""
        lam0, lam1 = _lambdas(self.params)
        phi0, phi1 = steady_state(lam0, lam1)
        return phi0 * self.k(b, u, 0) + phi1 * self.k(b, u, 1)

    def initial_value(self) -> float:
        return self.averaged(0, 0)

    def write_csv(self, fh: IO[str]) -> None:
        grid = self.params.grid
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["b", "m_bits", "G", "k_star", "k_id", "k_eh", "rho_star"])
        for b in range(self.b_max + 1):
            for u in range(self.n_units + 1):
                for G in (0, 1):
                    w.writerow([b, _fmt(grid.level(u)), G, _fmt(self.k_star[b, u, G]),
                                _fmt(self.k_id[b, u, G]), _fmt(self.k_eh[b, u, G]),
                                Choice(int(self.rho_star[b, u, G])).label])


def solve(params: SystemParams) -> DecisionTable3D:
    lam0, lam1 = _lambdas(params)
    if lam0 == 0:
        raise InfeasibleChannel("lambda0 = 0: a BAD channel never recovers")
    lam = (lam0, lam1)
    E_d, e = params.E_d, params.e
    n = params.grid.n_units
    b_max = E_d + n
    t = _Table(b_max, n, (2,))
    shape = (b_max + 1, n + 1, 2)
    k_id = np.full(shape, np.nan)
    k_eh = np.full(shape, np.nan)
    rho = np.full(shape, int(Choice.NONE), dtype=np.int8)

    for b in range(b_max + 1):
        for G in (0, 1):
            t.set((b, n, G), lemma3_k(b, G, params) if b < E_d else 0.0)
    for j in range(1, n + 1):
        for G in (0, 1):
            kj = boundary_k(j, G, params)
            for b in range(E_d + j, b_max + 1):
                t.set((b, n - j, G), kj)

    def id_value(b: int, u: int, G: int) -> float:
        return 1.0 + lam[G] * t.get(b - 1, n, 1) + (1.0 - lam[G]) * t.get(b - 1, min(u + 1, n), 0)

    def eh_value(b: int, u: int, G: int) -> float:
        if G == 0:
            return 1.0 / lam0 + t.get(b + e, u, 1)
        return 1.0 + lam1 * t.get(b + e, u, 1) + (1.0 - lam1) * t.get(b, u, 0)

    for it, u in enumerate(range(n - 1, -1, -1)):
        for b in range(E_d + it, -1, -1):
            for G in (0, 1):
                eh = eh_value(b, u, G)
                if b < 1:
                    t.set((b, u, G), eh)
                    k_id[b, u, G], k_eh[b, u, G], rho[b, u, G] = math.inf, eh, Choice.EH
                    continue
                idv = id_value(b, u, G)
                k, c = classify(idv, eh)
                t.set((b, u, G), k)
                k_id[b, u, G], k_eh[b, u, G], rho[b, u, G] = idv, eh, c

    for b in range(E_d):
        for G in (0, 1):
            k_id[b, n, G], k_eh[b, n, G], rho[b, n, G] = math.inf, eh_value(b, n, G), Choice.EH
    # The diagonal seeds assume ID is optimal there; verify rather than trust it.
    for j in range(1, n + 1):
        u = n - j
        for b in range(E_d + j, b_max + 1):
            for G in (0, 1):
                idv, eh = id_value(b, u, G), eh_value(b, u, G)
                if not idv <= eh:
                    raise AssertionError(f"ID not optimal on the diagonal at (b={b}, u={u}, G={G})")
                k_id[b, u, G], k_eh[b, u, G], rho[b, u, G] = idv, eh, Choice.ID

    return DecisionTable3D(params, t.k, k_id, k_eh, rho)
