"""Discounted value iteration over a discretized (battery, information, split) space.

This is a cross-check on the absorbing-chain solvers, not a production
solver: it lets the split ratio take interior values and measures whether
doing so ever helps.  Off-grid successors snap *down* on both axes, which
can only understate what a split achieves.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import IO, Optional, Sequence

import numpy as np

from .channel import IID
from .errors import ConfigError, NoConvergence
from .model import SystemParams, split_rates
from .solver_corr import DecisionTable3D
from .solver_iid import DecisionTable

log = logging.getLogger(__name__)

_SNAP_EPS = 1e-9


def default_rho_grid(points: int = 101) -> tuple[float, ...]:
    return tuple(float(x) for x in np.linspace(0.0, 1.0, points))


@dataclass(frozen=True)
class MdpConfig:
    beta: float = 0.99
    rho_grid: Sequence[float] = field(default_factory=default_rho_grid)
    b_step: float = 1.0
    b_cap: Optional[float] = None  # default E_d + n_units + e
    m_step: Optional[float] = None  # default R0
    tol: float = 1e-8
    max_sweeps: int = 100_000

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta < 1.0:
            raise ConfigError(f"beta must lie in [0, 1), got {self.beta}")
        grid = tuple(float(r) for r in self.rho_grid)
        if any(not 0.0 <= r <= 1.0 for r in grid) or 0.0 not in grid or 1.0 not in grid:
            raise ConfigError("rho_grid must lie in [0, 1] and contain both 0 and 1")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("rho_grid must be strictly increasing")
        object.__setattr__(self, "rho_grid", grid)
        if self.b_step <= 0 or (self.m_step is not None and self.m_step <= 0):
            raise ConfigError("grid steps must be positive")
        if self.tol <= 0 or self.max_sweeps < 1:
            raise ConfigError("tol must be positive and max_sweeps at least 1")

    def with_rho_grid(self, rho_grid: Sequence[float]) -> "MdpConfig":
        return MdpConfig(self.beta, rho_grid, self.b_step, self.b_cap, self.m_step,
                         self.tol, self.max_sweeps)


@dataclass(frozen=True)
class MdpResult:
    b_levels: np.ndarray
    m_levels: np.ndarray
    values: np.ndarray  # [b, m]
    policy: np.ndarray  # argmax rho, NaN at absorbing states
    sweeps: int
    residuals: list
    converged: bool

    def value(self, b: float, m: float) -> float:
        i = int(np.argmin(np.abs(self.b_levels - b)))
        j = int(np.argmin(np.abs(self.m_levels - m)))
        return float(self.values[i, j])

    def write_csv(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["b", "m", "V", "rho"])
        for i, b in enumerate(self.b_levels):
            for j, m in enumerate(self.m_levels):
                rho = self.policy[i, j]
                w.writerow([repr(float(b)), repr(float(m)), repr(float(self.values[i, j])),
                            "" if math.isnan(rho) else repr(float(rho))])


def _levels(params: SystemParams, cfg: MdpConfig) -> tuple[np.ndarray, np.ndarray]:
    b_cap = cfg.b_cap if cfg.b_cap is not None else params.E_d + params.grid.n_units + params.e
    b_levels = np.arange(0.0, b_cap + _SNAP_EPS, cfg.b_step)
    m_step = cfg.m_step if cfg.m_step is not None else params.R0
    m_levels = np.arange(0.0, params.R1 - _SNAP_EPS, m_step)
    return b_levels, np.append(m_levels, params.R1)


def _snap(values: np.ndarray, step: float, last: int, top: Optional[float] = None) -> np.ndarray:
    idx = np.floor(values / step + _SNAP_EPS).astype(np.int64)
    idx = np.clip(idx, 0, last)
    if top is not None:
        idx = np.where(values >= top - _SNAP_EPS, last, np.minimum(idx, last - 1))
    return idx


def value_iteration(params: SystemParams, cfg: MdpConfig = MdpConfig(),
                    strict: bool = False) -> MdpResult:
    """Fixed point of ``V = max_rho [U + beta E V(next)]`` with ``U = -1`` off absorption.

    Ties in the argmax prefer rho = 0, then rho = 1, then smaller interior rho.
    With ``strict`` an exhausted sweep budget raises NoConvergence; otherwise it
    is logged and reported via ``converged``.
    """
    if not isinstance(params.channel, IID):
        raise ConfigError("value iteration is implemented for the i.i.d. channel only")
    lam, beta = params.channel.lam, cfg.beta
    b_levels, m_levels = _levels(params, cfg)
    nb, nm = len(b_levels), len(m_levels)
    m_step = cfg.m_step if cfg.m_step is not None else params.R0
    B, M = np.meshgrid(b_levels, m_levels, indexing="ij")
    absorbing = (B >= params.E_d - _SNAP_EPS) & (M >= params.R1 - _SNAP_EPS)

    order = [0.0, 1.0] + [r for r in cfg.rho_grid if 0.0 < r < 1.0]
    moves = []
    for rho in order:
        if rho == 1.0:
            feasible = np.ones_like(absorbing)
            bg, mg = B + params.e, M
            bb, mb = B, M
        else:
            feasible = B >= 1.0 - _SNAP_EPS
            r_low, r_high = split_rates(rho, params)
            bg, mg = B - 1.0 + rho * params.e, np.minimum(M + r_high, params.R1)
            bb, mb = B - 1.0, np.minimum(M + r_low, params.R1)
        good = (_snap(np.maximum(bg, 0.0), cfg.b_step, nb - 1), _snap(mg, m_step, nm - 1, params.R1))
        bad = (_snap(np.maximum(bb, 0.0), cfg.b_step, nb - 1), _snap(mb, m_step, nm - 1, params.R1))
        moves.append((rho, feasible & ~absorbing, good, bad))

    V = np.zeros((nb, nm))
    residuals = []
    converged = False
    sweeps = 0
    for sweeps in range(1, cfg.max_sweeps + 1):
        best = np.full((nb, nm), -np.inf)
        for _, feasible, good, bad in moves:
            q = -1.0 + beta * (lam * V[good] + (1.0 - lam) * V[bad])
            best = np.where(feasible & (q > best), q, best)
        new = np.where(absorbing, 0.0, best)
        res = float(np.max(np.abs(new - V)))
        residuals.append(res)
        V = new
        if res <= cfg.tol:
            converged = True
            break
    if not converged:
        msg = f"value iteration stopped after {sweeps} sweeps with residual {residuals[-1]:.3e}"
        if strict:
            raise NoConvergence(msg)
        log.warning(msg)

    # argmax in preference order; a later rho must win by more than round-off
    policy = np.full((nb, nm), np.nan)
    chosen = np.full((nb, nm), -np.inf)
    scale = 1e-12 * max(1.0, float(np.max(np.abs(V))))
    for rho, feasible, good, bad in moves:
        q = -1.0 + beta * (lam * V[good] + (1.0 - lam) * V[bad])
        better = feasible & (q > chosen + scale)
        chosen = np.where(better, q, chosen)
        policy = np.where(better, rho, policy)
    policy[absorbing] = np.nan
    return MdpResult(b_levels, m_levels, V, policy, sweeps, residuals, converged)


def no_split_gap(params: SystemParams, cfg: MdpConfig = MdpConfig()) -> float:
    """Largest value improvement from allowing interior split ratios."""
    full = value_iteration(params, cfg, strict=True)
    binary = value_iteration(params, cfg.with_rho_grid((0.0, 1.0)), strict=True)
    return float(np.max(full.values - binary.values))


def split_one_step(table: DecisionTable | DecisionTable3D, b: int, u: int, rho: float,
                   G: Optional[int] = None) -> float:
    """Mean time when splitting with ``rho`` for one slot and acting optimally afterwards.

    Continuation values come from the solved no-split table.
    """
    params = table.params
    r_low, r_high = split_rates(rho, params)
    m = params.grid.level(u)
    good = (b - 1 + rho * params.e, min(m + r_high, params.R1))
    bad = (b - 1, min(m + r_low, params.R1))
    if isinstance(table, DecisionTable3D):
        p = params.channel.p_good(G)
        return 1.0 + p * table.value_at(*good, 1) + (1.0 - p) * table.value_at(*bad, 0)
    lam = params.channel.lam
    return 1.0 + lam * table.value_at(*good) + (1.0 - lam) * table.value_at(*bad)


def split_dominance_violations(table: DecisionTable | DecisionTable3D,
                               rhos: Sequence[float] = tuple(np.round(np.arange(0.1, 1.0, 0.1), 10))
                               ) -> list[tuple]:
    """States ``(b, u[, G], rho)`` where a one-slot split beats pure information decoding.

    Covers ``1 <= b <= b_max`` and ``m < R1``; an empty list means no-split dominance holds.
    """
    out = []
    n = table.n_units
    slices = (0, 1) if isinstance(table, DecisionTable3D) else (None,)
    for b in range(1, table.b_max + 1):
        for u in range(n):
            for G in slices:
                k_id = table.k_id[b, u] if G is None else table.k_id[b, u, G]
                for rho in rhos:
                    if split_one_step(table, b, u, rho, G) < k_id:
                        out.append((b, u, rho) if G is None else (b, u, G, rho))
    return out
