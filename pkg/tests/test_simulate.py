import numpy as np
import pytest

from swipt_harq import (ConfigError, EpisodeCap, ReceiverState, SingularSystem, estimate,
                        oracle_k, solver_corr, solver_iid)
from swipt_harq.policies import Decision, Optimal, Policy, make_policy
from swipt_harq.reference import TABLE1_OPTIMAL, TABLE3_SIMPLE_ARQ
from swipt_harq.simulate import run_episode, simulate_chunk

from conftest import corr, iid, small_instances


def test_deterministic_walk():
    p = iid(1, 1, 1, 1, 1.0)
    rng = np.random.default_rng(0)
    bf = make_policy("bf", p)
    assert all(run_episode(bf, p, rng) == 3 for _ in range(20))
    r = estimate(bf, p, 1000, master_seed=1)
    assert r.mean == 3.0 and r.stderr == 0.0


def test_never_good_hits_cap():
    p = iid(1, 1, 1, 1, 0.0)
    with pytest.raises(EpisodeCap):
        run_episode(make_policy("bf", p), p, np.random.default_rng(0), slot_cap=1000)
    with pytest.raises(EpisodeCap):
        estimate(make_policy("bf", p), p, 100)


def test_censoring_is_reported():
    p = iid(3, 1, 1, 6, 0.05)
    lengths, censored = simulate_chunk(make_policy("if", p), p, 0, 0, 2000, slot_cap=40)
    assert censored > 0 and len(lengths) + censored == 2000
    assert (lengths <= 40).all()
    r = estimate(make_policy("if", p), p, 2000, slot_cap=40)
    assert r.censored == censored and r.episodes == 2000 - censored


def test_absorbing_start_rejected():
    p = iid(2, 1, 1, 2, 0.5)
    with pytest.raises(ConfigError):
        run_episode(make_policy("bf", p), p, np.random.default_rng(0), ReceiverState(2, 2))
    with pytest.raises(ConfigError):
        estimate(make_policy("bf", p), p, 10, initial=ReceiverState(3, 2))
    with pytest.raises(ConfigError):
        estimate(make_policy("bf", p), p, 1)


def test_optimal_table1_estimate():
    p = iid(5, 1, 1, 10, 0.5)
    r = estimate(make_policy("optimal", p), p, 10**6, master_seed=2024)
    assert r.within(TABLE1_OPTIMAL[1], 4)
    assert r.ci95[0] < r.mean < r.ci95[1]


def test_simple_arq_table3():
    p = iid(10, 1, 5, 10, 0.3)
    r = estimate(make_policy("arq", p), p, 10**6, master_seed=3)
    assert r.within(TABLE3_SIMPLE_ARQ[1], 4)


def test_bernoulli_worse_than_optimum_negative_correlation():
    p = corr(5, 1, 1, 10, 0.7, 0.2)
    k = solver_corr.solve(p).initial_value()
    r = estimate(make_policy("bernoulli", p, p=0.1), p, 200_000, master_seed=5)
    assert r.mean - 4 * r.stderr > k


def test_reproducible_across_workers():
    p = corr(3, 2, 2, 6, 0.7, 0.2)
    pol = make_policy("ct", p)
    a = estimate(pol, p, 150_000, master_seed=99, workers=1)
    b = estimate(pol, p, 150_000, master_seed=99, workers=3)
    c = estimate(pol, p, 150_000, master_seed=99, workers=1)
    assert a == b == c
    d = estimate(pol, p, 150_000, master_seed=100)
    assert d.mean != a.mean


def test_scalar_and_vector_engines_agree():
    p = corr(3, 2, 2, 6, 0.4, 0.8)
    for name in ("optimal", "bf", "ct", "arq"):
        pol = make_policy(name, p)
        rng = np.random.default_rng(11)
        scalar = np.array([run_episode(pol, p, rng) for _ in range(20_000)])
        exact = oracle_k(p, pol)
        phi1 = 0.4 / (1 + 0.4 - 0.8)
        target = (1 - phi1) * exact[(0, 0, 0)] + phi1 * exact[(0, 0, 1)]
        se = scalar.std(ddof=1) / np.sqrt(scalar.size)
        assert abs(scalar.mean() - target) <= 4 * se
        assert estimate(pol, p, 200_000, master_seed=4).within(target, 4)


def test_stderr_scaling():
    p = iid(5, 1, 1, 10, 0.5)
    pol = make_policy("bf", p)
    se = {n: estimate(pol, p, n, master_seed=8).stderr for n in (10**4, 10**5, 10**6)}
    for small, big in ((10**4, 10**5), (10**5, 10**6)):
        ratio = se[small] / se[big]
        assert abs(ratio / np.sqrt(big / small) - 1) <= 0.2


@pytest.mark.parametrize("E_d,e,R0,R1", small_instances())
def test_oracle_matches_iid_solver(E_d, e, R0, R1):
    for lam in (0.2, 0.5, 0.9):
        p = iid(E_d, e, R0, R1, lam)
        t = solver_iid.solve(p)
        exact = oracle_k(p, t)
        for (b, u), v in exact.items():
            if b <= t.b_max:
                assert abs(v - t.k(b, u)) <= 1e-9 * max(1.0, v)


@pytest.mark.parametrize("E_d,e,R0,R1", small_instances())
def test_oracle_matches_corr_solver(E_d, e, R0, R1):
    for l0, l1 in ((0.3, 0.6), (0.7, 0.2), (0.5, 0.5)):
        p = corr(E_d, e, R0, R1, l0, l1)
        t = solver_corr.solve(p)
        exact = oracle_k(p, t)
        for (b, u, G), v in exact.items():
            if b <= t.b_max:
                assert abs(v - t.k(b, u, G)) <= 1e-9 * max(1.0, v)


def test_oracle_small_examples():
    p = iid(1, 1, 1, 1, 0.5)
    exact = oracle_k(p, solver_iid.solve(p))
    assert exact[(0, 0)] == pytest.approx(solver_iid.solve(p).k(0, 0), abs=1e-12)
    assert exact[(1, 1)] == 0.0
    q = corr(2, 1, 1, 2, 0.3, 0.6)
    t = solver_corr.solve(q)
    ex = oracle_k(q, t)
    assert ex[(0, 0, 0)] == pytest.approx(t.k(0, 0, 0), abs=1e-9)


def test_oracle_simple_arq_value():
    p = iid(5, 2, 5, 10, 0.5)
    assert oracle_k(p, make_policy("arq", p))[(0, 0)] == pytest.approx(28 / 3, abs=1e-12)


class _SpendEverything(Policy):
    """Decodes whenever it can, so the battery never climbs past one unit."""

    name = "spend"

    def distribution(self, b, u, G, params):
        return [(Decision.ID if b >= 1 else Decision.EH, 1.0)]


def test_oracle_detects_non_absorbing_policy():
    p = iid(2, 1, 1, 2, 0.5)
    with pytest.raises(SingularSystem):
        oracle_k(p, _SpendEverything(), starts=[(0, 0)])
    with pytest.raises(ConfigError):
        oracle_k(p, make_policy("bf", p), max_states=3)
