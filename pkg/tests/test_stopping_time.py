import math
from itertools import product

import numpy as np
import pytest

from conftest import example4, random_problem
from stopval import (
    Dominance,
    GaussianSetup,
    InvalidSetup,
    NoCrossing,
    StoppingProblem,
    StoppingTimeDist,
    crossing_prior,
    exact_distribution,
    fosd_check,
    hitting_time_distribution,
    random_walk_hitting_pmf,
    simulate_distribution,
    simulate_wald,
    solve_finite,
    solve_infinite,
    ssd_check,
    wald_expected_stopping,
)


def dist(pmf, never=0.0):
    return StoppingTimeDist(np.asarray(pmf, dtype=float), never, "exact")


def _enumerated(problem, solution):
    """Stopping-period pmf by walking every signal history with explicit Bayes updates."""
    lik = problem.info.likelihoods
    pmf = np.zeros(problem.horizon + 1)

    def walk(n, mu, weight):
        if solution.policy(n).decide(mu).stops:
            pmf[n] += weight
            return
        for s in range(lik.shape[1]):
            joint = mu * lik[:, s]
            if joint.sum() > 0:
                walk(n + 1, joint / joint.sum(), weight * joint.sum())

    walk(0, problem.prior, 1.0)
    return pmf


def test_stop_everywhere_is_a_point_mass():
    problem = StoppingProblem([[6, -8]], 0.9, 4, [0.9, 0.1], [[0.5, 0.5], [0.5, 0.5]])
    sol = solve_finite(problem)
    exact = exact_distribution(problem, sol)
    assert exact.pmf[0] == pytest.approx(1) and exact.pmf.sum() == pytest.approx(1)
    for seed in (0, 7, 2**40):
        mc = simulate_distribution(problem, sol, 500, seed)
        assert mc.pmf[0] == 1.0


def test_exact_matches_enumeration(rng):
    for _ in range(25):
        problem = random_problem(rng, horizon=int(rng.integers(1, 5)))
        sol = solve_finite(problem)
        exact = exact_distribution(problem, sol)
        enumerated = _enumerated(problem, sol)
        assert np.all(enumerated[exact.pmf.size:] == 0)
        np.testing.assert_allclose(exact.pmf, enumerated[:exact.pmf.size], atol=1e-12)
        assert exact.never_mass == pytest.approx(0, abs=1e-12)
        np.testing.assert_allclose(problem.prior @ exact.conditional, exact.pmf, atol=1e-12)


def test_monte_carlo_agrees_with_exact(rng):
    problem = random_problem(rng, horizon=4, k=2)
    sol = solve_finite(problem)
    exact = exact_distribution(problem, sol)
    mc = simulate_distribution(problem, sol, 200_000, seed=11)
    F = exact.cdf()
    se = np.sqrt(np.maximum(F * (1 - F), 1e-12) / mc.trials)
    assert np.all(np.abs(mc.cdf() - F) <= 3 * se + 1e-12)
    assert abs(mc.total - 1) <= 1e-12


def test_single_trial_is_a_point_mass():
    problem = example4(0.6)
    sol = solve_infinite(problem)
    mc = simulate_distribution(problem, sol, 1, seed=3, n_max=50)
    assert sorted(np.unique(mc.pmf).tolist()) in ([0.0, 1.0], [0.0]) and mc.pmf.sum() + mc.never_mass == 1


def test_thread_count_does_not_change_counts(rng, monkeypatch):
    problem = random_problem(rng, horizon=3)
    sol = solve_finite(problem)
    one = simulate_distribution(problem, sol, 50_000, seed=5, chunk_size=4096, threads=1)
    many = simulate_distribution(problem, sol, 50_000, seed=5, chunk_size=4096, threads=4)
    monkeypatch.setenv("STOPVAL_THREADS", "3")
    env = simulate_distribution(problem, sol, 50_000, seed=5, chunk_size=4096)
    np.testing.assert_array_equal(one.pmf, many.pmf)
    np.testing.assert_array_equal(one.pmf, env.pmf)


def test_example4_first_period():
    s_problem, t_problem = example4(0.6), example4(0.55)
    S = exact_distribution(s_problem, solve_infinite(s_problem), n_max=40)
    T = exact_distribution(t_problem, solve_infinite(t_problem), n_max=40)
    assert S.pmf[1] == pytest.approx(0.57 * 0.6 + 0.43 * 0.4, abs=1e-12)
    assert S.pmf[1] - T.pmf[1] == pytest.approx(0.05 * (2 * 0.57 - 1), abs=1e-12)
    assert np.all(S.pmf[::2] == 0)
    assert S.total == pytest.approx(1, abs=1e-9)
    assert math.isinf(S.mean())


def test_hitting_pmf_examples():
    np.testing.assert_allclose(random_walk_hitting_pmf(0.6, 2), [0.6, 0.144])
    # enumerate the length-3 sign paths that first reach +1 at step 3
    total = 0.0
    for steps in product((1, -1), repeat=3):
        path = np.cumsum(steps)
        if path[-1] == 1 and np.all(path[:-1] < 1):
            total += np.prod([0.6 if s == 1 else 0.4 for s in steps])
    assert random_walk_hitting_pmf(0.6, 2)[1] == pytest.approx(total)
    low = random_walk_hitting_pmf(0.4, 5)
    assert low[0] == pytest.approx(0.4)
    long = random_walk_hitting_pmf(0.4, 4000).sum()
    assert long <= 0.4 / 0.6 + 1e-12 and long == pytest.approx(0.4 / 0.6, abs=1e-3)
    closed = hitting_time_distribution(0.6, 9)
    assert np.all(closed.pmf[::2] == 0) and closed.total == pytest.approx(1)


def test_dominance_examples():
    P = dist([0, 0, 0, 1])
    Q = dist([0, 1, 0, 0])
    assert fosd_check(P, P) is Dominance.EQUAL and ssd_check(P, P) is Dominance.EQUAL
    assert fosd_check(P, Q) is Dominance.P_DOMINATES
    assert fosd_check(Q, P) is Dominance.Q_DOMINATES
    point = dist([0, 0, 1])
    spread = dist([0, 0.5, 0, 0.5])
    assert ssd_check(point, spread) is Dominance.P_DOMINATES
    assert fosd_check(point, spread) is Dominance.NEITHER
    # unstopped mass sits at infinity
    assert fosd_check(dist([0.5, 0], 0.5), dist([0.5, 0.5])) is Dominance.P_DOMINATES


def test_patience_delays_stopping(example2):
    patient = exact_distribution(example2, solve_finite(example2))
    impatient_problem = example2.replace(discount=0.7)
    impatient = exact_distribution(impatient_problem, solve_finite(impatient_problem))
    assert fosd_check(patient, impatient) is Dominance.P_DOMINATES


def test_wald_zero_overshoot():
    r_bar = 2.0 + math.log(0.5 / 0.5)
    setup = GaussianSetup(1.0, 0.0, 1.0, 0.5, 1 / (1 + math.exp(-r_bar)))
    assert wald_expected_stopping(setup) == pytest.approx(4.0)
    near = GaussianSetup(1.0, 0.0, 1.0, 0.7 - 1e-9, 0.7)
    assert wald_expected_stopping(near) == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(InvalidSetup):
        wald_expected_stopping(GaussianSetup(1.0, 0.0, 1.0, 0.8, 0.7))
    with pytest.raises(InvalidSetup):
        GaussianSetup(0.0, 1.0, 1.0, 0.2, 0.7)


def test_wald_monte_carlo_identity():
    setup = GaussianSetup(1.0, 0.0, 1.0, 0.3, 0.8)
    est = simulate_wald(setup, 100_000, seed=2)
    lhs = est.mean_time * setup.drift
    rhs = est.mean_stopped_r - setup.r0
    se = math.hypot(est.time_se * setup.drift, est.stopped_r_se)
    assert abs(lhs - rhs) <= 3 * se
    assert est.mean_stopped_r > setup.r_bar  # overshoot is positive
    assert wald_expected_stopping(setup, "monte_carlo", trials=20_000, seed=2) > wald_expected_stopping(setup)


def test_crossing_prior():
    s = GaussianSetup(1.0, 0.0, 1.0, 0.3, 0.8)
    t = GaussianSetup(1.0, 0.0, 2.0, 0.3, 0.7)
    r_s, r_t = math.log(4), math.log(7 / 3)
    r0 = (4 * r_t - r_s) / 3
    assert crossing_prior(s, t) == pytest.approx(1 / (1 + math.exp(-r0)), abs=1e-4)
    # a prior past T's threshold but below S's: only S still samples
    assert wald_expected_stopping(GaussianSetup(1.0, 0.0, 1.0, 0.75, 0.8)) > 0
    with pytest.raises(InvalidSetup):
        wald_expected_stopping(GaussianSetup(1.0, 0.0, 2.0, 0.75, 0.7))
    with pytest.raises(NoCrossing):
        crossing_prior(s, s)
