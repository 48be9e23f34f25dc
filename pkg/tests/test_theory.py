import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adasense.algorithms import subspace_iteration
from adasense.instances import gen_planted
from adasense.oracle import open_session
from adasense.theory import (FanoCheck, TheoryError, bayes_risk_enumerated, bayes_risk_pointwise, f_schedule,
                             fano_bound, growth_rate, kl_chain_check, kl_conditioning_check, kl_discrete,
                             kl_gaussian, kl_gaussian_identity, last_valid_round, lb_rounds, random_fano_check,
                             random_kl_instance, tail_probability_mc, tail_samples)


def test_schedule_values():
    assert f_schedule(4, 10, 1, 2).values == (4.0, 1600.0, 640000.0)


@given(K=st.floats(0.1, 10), alpha=st.floats(0.5, 50), gamma=st.floats(0.1, 5), t=st.integers(0, 6))
def test_schedule_geometric(K, alpha, gamma, t):
    s = f_schedule(K, alpha, gamma, t)
    assert s.values[0] == K
    for a, b in zip(s.values, s.values[1:]):
        assert b == a * (K * alpha ** 2 * gamma ** 2)
    doubled = f_schedule(K, alpha, 2 * gamma, t)
    for j in range(1, t + 1):
        assert math.isclose(doubled.values[j], s.values[j] * 4 ** j, rel_tol=1e-12)


def test_last_valid_round():
    # f_1 k = 1600 * 256 = 409600 <= 16 * 256^2 = 1048576 < f_2 k
    assert last_valid_round(256, 256, 4, 10, 1) == 1


def test_schedule_rejects_nonpositive():
    with pytest.raises(TheoryError):
        f_schedule(0, 1, 1, 2)


def test_lb_rounds_values():
    assert lb_rounds(1024, 1024, 1) == pytest.approx(3.5801722189740026, rel=1e-12)
    assert lb_rounds(1024, 1024, 1, "high-prob") == pytest.approx(6.931471805599453, rel=1e-12)
    assert lb_rounds(64, 64 * 64, 1) == 0.0
    assert lb_rounds(64, 64 * 64, 1, "high-prob") == 0.0


def test_lb_rounds_variants():
    n, k = 1024, 1024
    base = math.log(n * n / k)
    assert lb_rounds(n, k, 1, "schatten", 2) == pytest.approx(base / (math.log(n) / 2 + math.log(math.log(n))))
    assert lb_rounds(n, k, 1, "kyfan", 4) == pytest.approx(base / (math.log(4) + math.log(math.log(n))))
    for variant, p in (("schatten", 1), ("kyfan", 0), ("kyfan", 2000), ("bogus", None)):
        with pytest.raises(TheoryError):
            lb_rounds(n, k, 1, variant, p)
    with pytest.raises(TheoryError):
        lb_rounds(2, 1)


def test_tail_upper_edge_is_empty():
    est = tail_probability_mc(32, 32, C=[16 * 32 * 32 / 32], trials=10_000, seed=0)
    assert est.probability[0] == 0.0


def test_tail_grid_monotone_and_fit():
    est = tail_probability_mc(64, 64, trials=10_000, seed=0)
    assert np.all(np.diff(est.probability) <= 0)
    assert est.beta > 0 and est.correlation <= -0.95


def test_tail_beta_stable_across_seed_ranges():
    def pooled_beta(seeds):
        draws = np.concatenate([tail_samples(64, 64, 10_000, s) for s in seeds])
        C = np.array([4, 6, 8, 12, 16], dtype=float)
        prob = np.array([np.mean(draws >= c * 64) for c in C])
        mask = prob > 0
        return -np.polyfit(C[mask], np.log(prob[mask]), 1)[0]

    a, b = pooled_beta(range(0, 4)), pooled_beta(range(4, 8))
    assert abs(a - b) <= 0.3 * max(a, b)


def test_tail_window_enforced():
    with pytest.raises(TheoryError):
        tail_probability_mc(32, 32, C=[2])
    with pytest.raises(TheoryError):
        tail_probability_mc(32, 32, C=[1000])
    with pytest.raises(TheoryError):
        tail_probability_mc(32, 16, C=[4])


def test_haar_tail_samples_mean():
    x = tail_samples(16, 32, 2000, 0, kind="haar")
    assert abs(x.mean() - 32) <= 0.1 * 32


def test_kl_gaussian_identity_examples():
    assert kl_gaussian_identity([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert kl_gaussian_identity([0.0, 0.0], [2.0, 0.0]) == 2.0
    with pytest.raises(TheoryError):
        kl_gaussian_identity([0.0], [0.0, 1.0])


def test_kl_identity_matches_general_formula():
    rng = np.random.default_rng(0)
    for _ in range(100):
        d = int(rng.integers(1, 8))
        m1, m2 = rng.standard_normal(d), rng.standard_normal(d)
        assert kl_gaussian_identity(m1, m2) == pytest.approx(kl_gaussian(m1, np.eye(d), m2, np.eye(d)), abs=1e-12)


def test_kl_conditioning_examples():
    u = np.full(4, 0.25)
    lhs, rhs, ok = kl_conditioning_check(u, u, [0, 1, 2, 3])
    assert lhs == pytest.approx(0.0, abs=1e-15) and rhs == 2.0 and ok
    lhs, rhs, ok = kl_conditioning_check(u, u, [0, 1])
    assert rhs == 4.0 and lhs == pytest.approx(math.log(2)) and ok
    with pytest.raises(TheoryError):
        kl_conditioning_check(np.array([1.0, 0, 0, 0]), u, [2])


def test_kl_conditioning_random_sweep():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        assert kl_conditioning_check(*random_kl_instance(rng))[2]


def test_kl_chain_rule():
    rng = np.random.default_rng(2)
    for _ in range(50):
        P = rng.dirichlet(np.ones(12)).reshape(3, 4)
        lhs, rhs = kl_chain_check(P, rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(4)))
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_kl_discrete_infinite_off_support():
    assert kl_discrete([0.5, 0.5], [1.0, 0.0]) == math.inf


def test_fano_uninformative():
    fc = FanoCheck([0.5, 0.3, 0.2], np.tile([0.1, 0.6, 0.3], (3, 1)), 1 - np.eye(3))
    res = fano_bound(fc)
    assert res.mutual_information == pytest.approx(0.0, abs=1e-15)
    assert res.r_bayes == pytest.approx(res.r0)
    assert res.bound <= res.r0 and res.holds


def test_fano_disjoint():
    fc = FanoCheck([0.5, 0.5], [[1.0, 0.0], [0.0, 1.0]], 1 - np.eye(2))
    res = fano_bound(fc)
    assert res.r_bayes == 0.0 and res.bound <= 0 and res.holds


def test_fano_random_sweep_and_routes_agree():
    rng = np.random.default_rng(3)
    for _ in range(500):
        fc = random_fano_check(rng)
        res = fano_bound(fc, method="enumerate")
        assert res.holds
        assert res.r_bayes == pytest.approx(bayes_risk_pointwise(fc), abs=1e-12)


def test_fano_errors():
    with pytest.raises(TheoryError):
        fano_bound(FanoCheck([1.0], [[1.0]], [[1.0]]))
    with pytest.raises(TheoryError):
        FanoCheck([0.6, 0.6], [[1.0], [1.0]], [[0.0], [1.0]])
    with pytest.raises(TheoryError):
        FanoCheck([0.5, 0.5], [[1.0], [1.0]], [[0.5], [1.0]])


def test_enumeration_matches_pointwise_small():
    fc = FanoCheck([0.2, 0.8], [[0.7, 0.3], [0.4, 0.6]], [[0, 1], [1, 0]])
    assert bayes_risk_enumerated(fc) == pytest.approx(bayes_risk_pointwise(fc))


def test_growth_rate_examples():
    assert growth_rate([1, 10, 100]).factor == pytest.approx(10)
    fit = growth_rate([5, 5, 5, 5])
    assert fit.factor == pytest.approx(1)
    with pytest.raises(TheoryError):
        growth_rate([1, 0, 2])
    with pytest.raises(TheoryError):
        growth_rate([1, 2])


def test_growth_rate_on_subspace_iteration_trace():
    inst = gen_planted(128, 1, 30.0, 0)
    res = subspace_iteration(open_session(inst, round_budget=6), 2, 6, 1, seed=0)
    fit = growth_rate(res.info_trace)
    assert fit.factor > 1
    assert fit.plateau_start is not None and fit.points_used < len(res.info_trace)
