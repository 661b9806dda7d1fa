"""Monte Carlo episode engine and the dense absorbing-chain oracle.

Episodes are simulated in fixed-size chunks, each chunk vectorized over its
episodes with numpy.  Chunk ``c`` draws from a PCG64 stream seeded by
``SeedSequence(master_seed, spawn_key=(c,))``, so an estimate depends only on
``(master_seed, episodes, chunk_size)`` and not on how many worker processes
ran the chunks.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .channel import IID, stationary_good
from .errors import ConfigError, EpisodeCap, SingularSystem
from .model import ReceiverState, SystemParams, is_absorbing, step, transition_kernel
from .policies import Decision, Optimal, Policy, SimpleARQ, simple_arq_attempt
from .solver_corr import DecisionTable3D
from .solver_iid import DecisionTable

log = logging.getLogger(__name__)

DEFAULT_EPISODES = 10**6
DEFAULT_CHUNK = 1 << 16
DEFAULT_SLOT_CAP = 10**9
Z95 = 1.959963984540054


@dataclass(frozen=True)
class EstimateReport:
    mean: float
    stderr: float
    ci95: tuple[float, float]
    episodes: int
    master_seed: int
    censored: int = 0

    CSV_FIELDS = ("mean", "stderr", "ci95_lo", "ci95_hi", "episodes", "censored", "seed")

    def csv_values(self) -> list:
        return [self.mean, self.stderr, self.ci95[0], self.ci95[1],
                self.episodes, self.censored, self.master_seed]

    def within(self, value: float, sigmas: float = 4.0) -> bool:
        return abs(self.mean - value) <= sigmas * self.stderr


def _p_good(params: SystemParams, G):
    ch = params.channel
    if isinstance(ch, IID):
        return ch.lam
    return np.where(G == 1, ch.lam1, ch.lam0)


def _initial_G(params: SystemParams, rng: np.random.Generator, size: Optional[int] = None):
    phi1 = stationary_good(params.channel)
    if size is None:
        return int(rng.random() < phi1)
    return (rng.random(size) < phi1).astype(np.int8)


def _never_good(params: SystemParams, G0: Optional[int]) -> bool:
    ch = params.channel
    if isinstance(ch, IID):
        return ch.lam == 0
    if ch.lam0 > 0:
        return False
    start_good = G0 == 1 if G0 is not None else stationary_good(ch) > 0
    return not start_good or ch.lam1 == 0


def run_episode(policy: Policy, params: SystemParams, rng: np.random.Generator,
                initial: ReceiverState = ReceiverState(0, 0.0),
                slot_cap: int = DEFAULT_SLOT_CAP) -> int:
    """Slots until decoding, stepping one slot at a time through the model."""
    if is_absorbing(initial, params):
        raise ConfigError(f"initial state {initial} is already absorbing")
    state = initial
    if params.correlated and state.G is None:
        state = ReceiverState(state.b, state.m, _initial_G(params, rng))
    for t in range(1, slot_cap + 1):
        action = policy.decide(state, params, rng)
        g = int(rng.random() < params.channel.p_good(state.G))
        if action is Decision.ATTEMPT:
            outcome = simple_arq_attempt(state, g, params)
            if outcome.success:
                return t
            state = outcome.state
            continue
        state = step(state, float(action), g, params)
        if is_absorbing(state, params):
            return t
    raise EpisodeCap(f"no decode within {slot_cap} slots")


def _chunk_stream(master_seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(chunk,))))


def simulate_chunk(policy: Policy, params: SystemParams, master_seed: int, chunk: int,
                   count: int, b0: int = 0, u0: int = 0, G0: Optional[int] = None,
                   slot_cap: int = DEFAULT_SLOT_CAP) -> tuple[np.ndarray, int]:
    """Episode lengths for one chunk and the number of censored episodes."""
    rng = _chunk_stream(master_seed, chunk)
    n, E_d, e = params.grid.n_units, params.E_d, params.e
    corr = params.correlated
    b = np.full(count, b0, dtype=np.int64)
    u = np.full(count, u0, dtype=np.int64)
    if corr:
        G = np.full(count, G0, dtype=np.int8) if G0 is not None else _initial_G(params, rng, count)
    else:
        G = None
    idx = np.arange(count)
    lengths = np.empty(count, dtype=np.int64)
    finished = 0
    t = 0
    while idx.size and t < slot_cap:
        act = policy.batch(b, u, G, params, rng)
        g = rng.random(idx.size) < _p_good(params, G)
        eh = act == Decision.EH
        info = act == Decision.ID
        att = act == Decision.ATTEMPT
        if np.any(b[~eh] < 1):
            raise AssertionError(f"{policy.name} spent energy from an empty battery")
        b = b + np.where(eh & g, e, 0) - (~eh)
        u = np.where(info, np.where(g, n, np.minimum(u + 1, n)), np.where(att & ~g, 0, u))
        t += 1
        done = (att & g) | ((b >= E_d) & (u == n))
        if corr:
            G = g.astype(np.int8)
        if done.any():
            lengths[finished:finished + int(done.sum())] = t
            finished += int(done.sum())
            keep = ~done
            idx, b, u = idx[keep], b[keep], u[keep]
            if corr:
                G = G[keep]
    return lengths[:finished], int(idx.size)


@dataclass(frozen=True)
class _Moments:
    n: int
    mean: float
    m2: float

    @classmethod
    def of(cls, x: np.ndarray) -> "_Moments":
        if x.size == 0:
            return cls(0, 0.0, 0.0)
        xf = x.astype(np.float64)
        mu = float(xf.mean())
        return cls(int(x.size), mu, float(np.sum((xf - mu) ** 2)))

    def __add__(self, other: "_Moments") -> "_Moments":
        n = self.n + other.n
        if n == 0:
            return self
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return _Moments(n, mean, m2)


def _pairwise(parts: list[_Moments]) -> _Moments:
    while len(parts) > 1:
        parts = [parts[i] + parts[i + 1] if i + 1 < len(parts) else parts[i]
                 for i in range(0, len(parts), 2)]
    return parts[0]


def _chunk_task(args) -> tuple[_Moments, int]:
    lengths, censored = simulate_chunk(*args)
    return _Moments.of(lengths), censored


def estimate(policy: Policy, params: SystemParams, episodes: int = DEFAULT_EPISODES,
             master_seed: int = 0, initial: ReceiverState = ReceiverState(0, 0.0),
             workers: int = 1, chunk_size: int = DEFAULT_CHUNK,
             slot_cap: int = DEFAULT_SLOT_CAP) -> EstimateReport:
    """Sample mean of slots-to-decode over independent episodes from ``initial``.

    Episodes hitting ``slot_cap`` are excluded from the mean and counted in
    ``censored``; if every episode is censored, EpisodeCap is raised.
    """
    if episodes < 2:
        raise ConfigError("need at least two episodes for a standard error")
    if is_absorbing(initial, params):
        raise ConfigError(f"initial state {initial} is already absorbing")
    if _never_good(params, initial.G):
        raise EpisodeCap("the channel is never GOOD; every episode would run into the slot cap")
    b0 = int(math.floor(initial.b))
    u0 = params.grid.index(initial.m)
    chunks = [(policy, params, master_seed, c, min(chunk_size, episodes - c * chunk_size),
               b0, u0, initial.G, slot_cap)
              for c in range(math.ceil(episodes / chunk_size))]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_chunk_task, chunks))
    else:
        results = [_chunk_task(c) for c in chunks]
    total = _pairwise([r[0] for r in results])
    censored = sum(r[1] for r in results)
    if censored:
        log.warning("%d of %d episodes hit the %d-slot cap and were excluded", censored, episodes, slot_cap)
    if total.n < 2:
        raise EpisodeCap(f"{censored} of {episodes} episodes censored at {slot_cap} slots")
    stderr = math.sqrt(total.m2 / (total.n - 1) / total.n)
    return EstimateReport(total.mean, stderr, (total.mean - Z95 * stderr, total.mean + Z95 * stderr),
                          total.n, master_seed, censored)


# --- dense oracle -----------------------------------------------------------

_DONE = "done"


def _as_policy(decision: Union[Policy, DecisionTable, DecisionTable3D]) -> Policy:
    if isinstance(decision, (DecisionTable, DecisionTable3D)):
        return Optimal(decision)
    return decision


def _successors(key, policy: Policy, params: SystemParams):
    grid = params.grid
    b, u = key[0], key[1]
    G = key[2] if params.correlated else None
    state = ReceiverState(b, grid.level(u), G)
    out = []
    for action, pa in policy.distribution(b, u, G, params):
        if action is Decision.ATTEMPT:
            p = params.channel.p_good(G)
            drop = simple_arq_attempt(state, 0, params).state
            out.append((_DONE, pa * p))
            out.append((_key(drop, params), pa * (1.0 - p)))
            continue
        for nxt, p in transition_kernel(state, float(action), params):
            out.append((_key(nxt, params), pa * p))
    return out


def _key(state: ReceiverState, params: SystemParams):
    u = params.grid.index(state.m)
    if params.correlated:
        return (int(state.b), u, int(state.G))
    return (int(state.b), u)


def oracle_k(params: SystemParams, decision: Union[Policy, DecisionTable, DecisionTable3D],
             starts=None, max_states: int = 200_000) -> dict:
    """Exact mean absorption times by solving ``(I - Q) k = 1`` over transient states.

    ``decision`` is a solved table or any policy.  The state space is every
    state reachable from ``starts`` (default: the grid ``b <= E_d + n_units``)
    without any battery truncation.  Keys are ``(b, u)`` or ``(b, u, G)``.
    """
    policy = _as_policy(decision)
    n = params.grid.n_units
    if starts is None:
        us = [0] if isinstance(policy, SimpleARQ) else range(n + 1)
        Gs = (0, 1) if params.correlated else (None,)
        starts = [(b, u, G) if G is not None else (b, u)
                  for b in range(params.E_d + n + 1) for u in us for G in Gs]
    absorbed = lambda k: k == _DONE or (
        not isinstance(policy, SimpleARQ) and k[0] >= params.E_d and k[1] >= n)

    index: dict = {}
    edges: list = []
    queue = deque(s for s in starts if not absorbed(s))
    for s in queue:
        index.setdefault(s, len(index))
    seen = set(index)
    if len(index) > max_states:
        raise ConfigError(f"{len(index)} start states exceed the {max_states}-state limit")
    while queue:
        s = queue.popleft()
        for nxt, p in _successors(s, policy, params):
            if p == 0.0:
                continue
            edges.append((s, nxt, p))
            if not absorbed(nxt) and nxt not in seen:
                seen.add(nxt)
                index[nxt] = len(index)
                queue.append(nxt)
                if len(index) > max_states:
                    raise ConfigError(f"reachable state space exceeds {max_states} states")

    N = len(index)
    A = np.eye(N)
    exits = set()
    reverse: dict = {}
    for s, nxt, p in edges:
        if absorbed(nxt):
            exits.add(s)
        else:
            A[index[s], index[nxt]] -= p
            reverse.setdefault(nxt, []).append(s)
    # every transient state must reach absorption, otherwise I - Q is singular
    reach = set(exits)
    stack = list(exits)
    while stack:
        for prev in reverse.get(stack.pop(), ()):
            if prev not in reach:
                reach.add(prev)
                stack.append(prev)
    if len(reach) != N:
        stuck = sorted(set(index) - reach, key=str)[:5]
        raise SingularSystem(f"{N - len(reach)} transient states never absorb, e.g. {stuck}")
    k = np.linalg.solve(A, np.ones(N))
    out = {s: float(k[i]) for s, i in index.items()}
    for s in starts:
        if absorbed(s):
            out[s] = 0.0
    return out
