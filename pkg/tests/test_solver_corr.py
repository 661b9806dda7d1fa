import io

import numpy as np
import pytest

from swipt_harq import ConfigError, InfeasibleChannel, OutOfRange, steady_state
from swipt_harq import solver_corr, solver_iid
from swipt_harq.solver_iid import Choice

from conftest import corr, iid


def test_lemma3_examples():
    p = corr(5, 1, 1, 10, 0.4, 0.4)
    assert solver_corr.lemma3_k(4, 1, p) == pytest.approx(1 / 0.4)
    q = corr(5, 1, 1, 10, 0.2, 0.7)
    assert solver_corr.lemma3_k(4, 1, q) == pytest.approx(2.5)
    assert solver_corr.lemma3_k(3, 0, q) == pytest.approx(7.5)
    with pytest.raises(InfeasibleChannel):
        solver_corr.lemma3_k(0, 0, corr(5, 1, 1, 10, 0.0, 0.5))
    with pytest.raises(OutOfRange):
        solver_corr.lemma3_k(5, 0, q)


def test_boundary_examples():
    q = corr(5, 1, 1, 10, 0.2, 0.7)
    assert solver_corr.boundary_k(1, 1, q) == 1.0
    assert solver_corr.boundary_k(2, 1, q) == pytest.approx(1.3)
    assert solver_corr.boundary_k(2, 0, q) == pytest.approx(1.8)
    with pytest.raises(OutOfRange):
        solver_corr.boundary_k(0, 1, q)


def test_large_harvest_closed_form():
    q = corr(3, 5, 1, 10, 0.3, 0.6)
    assert solver_corr.solve(q).k(0, q.grid.n_units, 1) == pytest.approx((1 + 0.3 - 0.6) / 0.3)


@pytest.mark.parametrize("R0", range(1, 10))
@pytest.mark.parametrize("lam", [0.1, 0.5, 0.9])
def test_degenerates_to_iid(R0, lam):
    a = solver_iid.solve(iid(5, 1, R0, 10, lam))
    b = solver_corr.solve(corr(5, 1, R0, 10, lam, lam))
    for G in (0, 1):
        assert np.max(np.abs(b.k_star[..., G] - a.k_star)) <= 1e-12
    assert abs(b.initial_value() - a.initial_value()) <= 1e-12


def _matrix():
    return [corr(E_d, e, R0, R1, l0, l1)
            for E_d in (2, 5) for e in (1, 3) for R0, R1 in ((1, 5), (3, 10))
            for l0, l1 in ((0.7, 0.2), (0.2, 0.7), (0.5, 0.0), (1.0, 0.3))]


@pytest.mark.parametrize("p", _matrix(), ids=str)
def test_table_invariants(p):
    t = solver_corr.solve(p)
    n, lam0 = t.n_units, p.channel.lam0
    k = t.k_star
    assert not np.isnan(k).any()
    assert (k[p.E_d:, n, :] == 0).all()
    assert (np.diff(k, axis=0) <= 1e-12).all()
    assert (np.diff(k, axis=1) <= 1e-12).all()
    for b in range(p.E_d):
        for G in (0, 1):
            assert k[b, n, G] == solver_corr.lemma3_k(b, G, p)
    for j in range(1, n + 1):
        for b in range(p.E_d + j, t.b_max + 1):
            for G in (0, 1):
                assert abs(k[b, n - j, G] - solver_corr.boundary_k(j, G, p)) <= 1e-12
                assert t.choice(b, n - j, G) is Choice.ID
    # harvesting after a BAD slot waits a geometric time for GOOD then continues from G=1
    for b in range(t.b_max + 1):
        for u in range(n):
            expected = 1 / lam0 + t.k(b + p.e, u, 1)
            assert abs(t.k_eh[b, u, 0] - expected) <= 1e-12 * max(1.0, expected)


def test_good_history_helps_when_positively_correlated():
    for l0, l1 in ((0.2, 0.7), (0.4, 0.9), (0.5, 0.5)):
        t = solver_corr.solve(corr(4, 1, 2, 8, l0, l1))
        assert (t.k_star[..., 1] <= t.k_star[..., 0] + 1e-12).all()


def test_averaged_uses_both_slices():
    p = corr(5, 1, 1, 10, 0.7, 0.2)
    t = solver_corr.solve(p)
    phi0, phi1 = steady_state(0.7, 0.2)
    assert t.initial_value() == pytest.approx(phi0 * t.k(0, 0, 0) + phi1 * t.k(0, 0, 1), abs=1e-14)
    assert t.k(0, 0, 0) != t.k(0, 0, 1)


def test_errors():
    with pytest.raises(InfeasibleChannel):
        solver_corr.solve(corr(3, 1, 1, 3, 0.0, 0.5))
    with pytest.raises(ConfigError):
        solver_corr.solve(iid(3, 1, 1, 3, 0.5))
    t = solver_corr.solve(corr(3, 1, 1, 3, 0.3, 0.6))
    with pytest.raises(OutOfRange):
        t.k(0, 0, 2)


def test_csv_output():
    t = solver_corr.solve(corr(2, 1, 1, 2, 0.3, 0.6))
    buf = io.StringIO()
    t.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "b,m_bits,G,k_star,k_id,k_eh,rho_star"
    assert len(lines) == 1 + (t.b_max + 1) * (t.n_units + 1) * 2


def test_cli_degeneration_matches_iid_csv():
    a, b = io.StringIO(), io.StringIO()
    solver_iid.solve(iid(5, 1, 1, 10, 0.5)).write_csv(a)
    solver_corr.solve(corr(5, 1, 1, 10, 0.5, 0.5)).write_csv(b)
    rows = [ln.split(",") for ln in b.getvalue().splitlines()[1:]]
    g0 = [",".join(r[:2] + r[3:]) for r in rows if r[2] == "0"]
    assert g0 == a.getvalue().splitlines()[1:]
