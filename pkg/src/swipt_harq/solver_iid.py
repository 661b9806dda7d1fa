"""Minimum mean time to absorption under an i.i.d. channel.

States are indexed by integer battery ``b`` and information-grid index ``u``
(``u = n_units`` means the full message, ``R1`` bits, is buffered).  The
table is filled by the first-step recursions

    k_id(b, u) = 1 + lam * k(b-1, n) + (1-lam) * k(b-1, u+1)
    k_eh(b, u) = 1/lam + k(b+e, u)

sweeping ``u`` downward from ``n-1`` and, within a row, ``b`` downward from
``E_d + (n-1-u)``.  Row ``n`` and the diagonal ``(E_d+j, n-j)`` are seeded
with closed forms; past the diagonal the value no longer depends on ``b``, so
the battery axis stops at ``b_max = E_d + n``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import IO

import numpy as np

from .channel import IID
from .errors import ConfigError, InfeasibleChannel, OutOfRange
from .model import SystemParams

TIE_RTOL = 1e-9


class Choice(IntEnum):
    ID = 0
    EH = 1
    TIE = 2
    NONE = 3  # absorbing state, no decision

    @property
    def label(self) -> str:
        return "-" if self is Choice.NONE else self.name


def classify(k_id: float, k_eh: float) -> tuple[float, Choice]:
    """Minimum of the two candidates and the resulting decision.

    Candidates within ``TIE_RTOL * max(1, k)`` of each other are a TIE.
    """
    k = min(k_id, k_eh)
    if abs(k_id - k_eh) <= TIE_RTOL * max(1.0, k):
        return k, Choice.TIE
    return k, (Choice.ID if k_id < k_eh else Choice.EH)


def lemma1_k(b: float, params: SystemParams) -> float:
    """Mean slots to absorption from ``(b, R1)`` for ``b < E_d``: ``ceil((E_d-b)/e) / lam``."""
    lam = _iid_lambda(params)
    if lam == 0:
        raise InfeasibleChannel("lambda = 0: the battery can never be charged")
    if not 0 <= b < params.E_d:
        raise OutOfRange(f"closed form covers 0 <= b < E_d, got b={b}")
    i = math.ceil((params.E_d - b) / params.e)
    return i / lam


def theorem2_k(j: int, lam: float) -> float:
    """Value of the diagonal state ``(E_d+j, R1 - j R0)`` and everything above it in ``b``."""
    if j < 1:
        raise OutOfRange(f"j must be >= 1, got {j}")
    return sum((1.0 - lam) ** (i - 1) for i in range(1, j + 1))


def _iid_lambda(params: SystemParams) -> float:
    if not isinstance(params.channel, IID):
        raise ConfigError("this solver handles the i.i.d. channel only")
    return params.channel.lam


@dataclass(frozen=True)
class DecisionTable:
    """Solved i.i.d. table; arrays are indexed ``[b, u]`` with ``b`` in ``0..b_max``."""

    params: SystemParams
    k_star: np.ndarray
    k_id: np.ndarray
    k_eh: np.ndarray
    rho_star: np.ndarray  # Choice codes

    @property
    def b_max(self) -> int:
        return self.k_star.shape[0] - 1

    @property
    def n_units(self) -> int:
        return self.k_star.shape[1] - 1

    def k(self, b: int, u: int) -> float:
        """Table value with the battery axis clamped at ``b_max``."""
        if b < 0 or not 0 <= u <= self.n_units:
            raise OutOfRange(f"state (b={b}, u={u}) is outside the table")
        return float(self.k_star[min(b, self.b_max), u])

    def choice(self, b: int, u: int) -> Choice:
        return Choice(int(self.rho_star[min(b, self.b_max), u]))

    def harvest(self, b: int, u: int) -> bool:
        """Decision to act on; ties resolve to ID."""
        return self.choice(b, u) is Choice.EH

    def value_at(self, b: float, m: float) -> float:
        """Optimal no-split continuation value from an arbitrary (possibly split) state.

        A fractional battery behaves like its floor and an off-grid amount of
        information like its grid-equivalent level, since later slots move
        both by whole units.
        """
        return self.k(int(math.floor(b + 1e-12)), self.params.grid.index(m))

    def initial_value(self) -> float:
        return self.k(0, 0)

    def write_csv(self, fh: IO[str]) -> None:
        grid = self.params.grid
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["b", "m_bits", "k_star", "k_id", "k_eh", "rho_star"])
        for b in range(self.b_max + 1):
            for u in range(self.n_units + 1):
                w.writerow([b, _fmt(grid.level(u)), _fmt(self.k_star[b, u]),
                            _fmt(self.k_id[b, u]), _fmt(self.k_eh[b, u]),
                            Choice(int(self.rho_star[b, u])).label])


def _fmt(x: float) -> str:
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf"
    return repr(float(x))


class _Table:
    """Mutable work table that refuses reads of unfinished entries."""

    def __init__(self, b_max: int, n: int, shape_tail: tuple[int, ...] = ()):
        shape = (b_max + 1, n + 1) + shape_tail
        self.b_max = b_max
        self.k = np.full(shape, np.nan)
        self.done = np.zeros(shape, dtype=bool)

    def set(self, idx, value: float) -> None:
        self.k[idx] = value
        self.done[idx] = True

    def get(self, b: int, u: int, *tail: int) -> float:
        idx = (min(b, self.b_max), u) + tail
        if not self.done[idx]:
            raise AssertionError(f"iteration order violated: read of unfinished entry {idx}")
        return float(self.k[idx])


def solve(params: SystemParams) -> DecisionTable:
    lam = _iid_lambda(params)
    if lam == 0:
        raise InfeasibleChannel("lambda = 0: the battery can never be charged")
    E_d, e = params.E_d, params.e
    n = params.grid.n_units
    b_max = E_d + n
    t = _Table(b_max, n)
    k_id = np.full((b_max + 1, n + 1), np.nan)
    k_eh = np.full((b_max + 1, n + 1), np.nan)
    rho = np.full((b_max + 1, n + 1), int(Choice.NONE), dtype=np.int8)

    for b in range(b_max + 1):
        t.set((b, n), lemma1_k(b, params) if b < E_d else 0.0)
    for j in range(1, n + 1):
        kj = theorem2_k(j, lam)
        for b in range(E_d + j, b_max + 1):
            t.set((b, n - j), kj)

    for it, u in enumerate(range(n - 1, -1, -1)):
        for b in range(E_d + it, -1, -1):
            eh = 1.0 / lam + t.get(b + e, u)
            if b < 1:
                t.set((b, u), eh)
                k_id[b, u], k_eh[b, u], rho[b, u] = math.inf, eh, Choice.EH
                continue
            idv = 1.0 + lam * t.get(b - 1, n) + (1.0 - lam) * t.get(b - 1, u + 1)
            k, c = classify(idv, eh)
            t.set((b, u), k)
            k_id[b, u], k_eh[b, u], rho[b, u] = idv, eh, c

    # Candidates at the seeded states, for reporting and for the diagonal check.
    for b in range(E_d):
        k_id[b, n], k_eh[b, n], rho[b, n] = math.inf, 1.0 / lam + t.get(b + e, n), Choice.EH
    for j in range(1, n + 1):
        u = n - j
        for b in range(E_d + j, b_max + 1):
            idv = 1.0 + lam * t.get(b - 1, n) + (1.0 - lam) * t.get(b - 1, u + 1)
            eh = 1.0 / lam + t.get(b + e, u)
            if not idv < eh:
                raise AssertionError(f"ID not optimal on the diagonal at (b={b}, u={u})")
            k_id[b, u], k_eh[b, u], rho[b, u] = idv, eh, Choice.ID

    return DecisionTable(params, t.k, k_id, k_eh, rho)


def k_components(b: int, m: float, table: DecisionTable, params: SystemParams) -> tuple[float, float]:
    """Recompute ``(k_id, k_eh)`` at ``(b, m)`` from the solved table."""
    lam = _iid_lambda(params)
    grid = params.grid
    u = grid.index(m)
    if not 1 <= b <= table.b_max or u >= grid.n_units:
        raise OutOfRange(f"need 1 <= b <= {table.b_max} and m < R1, got b={b}, m={m}")
    n = grid.n_units
    idv = 1.0 + lam * table.k(b - 1, n) + (1.0 - lam) * table.k(b - 1, min(u + 1, n))
    eh = 1.0 / lam + table.k(b + params.e, u)
    return idv, eh
