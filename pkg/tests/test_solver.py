import numpy as np
import pytest

from conftest import example4, random_problem
from oracles import tree_oracle
from stopval import NonConvergence, StoppingProblem, backup, solve_finite, solve_infinite, stopping_payoff
from stopval.solver import ACQUIRE, STOP, WAIT, terminal_value

GRID = np.column_stack([np.linspace(0, 1, 201), 1 - np.linspace(0, 1, 201)])


def _oracle_value(problem, mu, flat_fee=0.0):
    return tree_oracle(problem.payoffs.tolist(), problem.include_outside_option, problem.discount,
                       problem.horizon, mu, problem.info.likelihoods.tolist(), fee=lambda h: flat_fee)[0]


def test_stopping_payoff_examples():
    single = StoppingProblem([[6, -8]], 0.9, 1, [0.5, 0.5], [[0.7, 0.3], [0.3, 0.7]])
    assert stopping_payoff([0.5, 0.5], single) == (-1.0, 0)
    with_outside = single.replace(include_outside_option=True)
    assert stopping_payoff([0.5, 0.5], with_outside) == (0.0, 1)
    big = StoppingProblem([[100, -100]], 0.9, 1, [0.57, 0.43], [[0.6, 0.4], [0.4, 0.6]])
    assert stopping_payoff([0.57, 0.43], big)[0] == pytest.approx(14)


def test_stopping_payoff_ties_pick_lowest_index():
    problem = StoppingProblem([[1, 1], [1, 1]], 0.9, 1, [0.5, 0.5], [[0.7, 0.3], [0.3, 0.7]])
    assert stopping_payoff([0.5, 0.5], problem)[1] == 0


def test_terminal_layer():
    problem = StoppingProblem([[6, -8]], 0.9, 0, [0.5, 0.5], [[0.7, 0.3], [0.3, 0.7]], include_outside_option=True)
    sol = solve_finite(problem)
    assert sol.horizon == 0
    np.testing.assert_allclose(sol.layers[0].value.evaluate(GRID), np.maximum(GRID @ [6, -8], 0), atol=1e-12)
    assert np.all(sol.layers[0].choices(GRID) == STOP)
    np.testing.assert_allclose(terminal_value(problem).evaluate(GRID), np.maximum(GRID @ [6, -8], 0))


def test_uninformative_backup_is_neutral():
    problem = StoppingProblem([[6, -8]], 1.0, 3, [0.5, 0.5], [[0.4, 0.6], [0.4, 0.6]])
    nxt = terminal_value(problem)
    np.testing.assert_allclose(backup(nxt, problem).evaluate(GRID), nxt.evaluate(GRID), atol=1e-12)


def test_example2_threshold_above_break_even(example2):
    sol = solve_finite(example2)
    assert sol.thresholds[0] > 8 / 14
    assert sol.thresholds[-1] == pytest.approx(8 / 14)
    for mu in np.linspace(0, 1, 21):
        assert sol.value(0, [mu, 1 - mu]) == pytest.approx(_oracle_value(example2, [mu, 1 - mu]), abs=1e-9)


def test_table1(example5_s, example5_t):
    s = solve_finite(example5_s).thresholds
    t = solve_finite(example5_t).thresholds
    np.testing.assert_allclose(s, [0.7376, 0.7335, 0.7335, 0.7201, 0.7055, 0.5714], atol=5e-4)
    np.testing.assert_allclose(t, [0.7312, 0.7263, 0.7225, 0.7142, 0.6697, 0.5714], atol=5e-4)


def test_thresholds_split_the_grid(example5_s):
    sol = solve_finite(example5_s)
    for n, layer in enumerate(sol.layers[:-1]):
        codes = layer.choices(GRID)
        above = GRID[:, 0] >= layer.threshold
        assert np.all(codes[above] == STOP)
        assert np.all(codes[~above] == ACQUIRE)


@pytest.mark.parametrize("m", [2, 3])
def test_matches_tree_oracle(rng, m):
    for _ in range(25 if m == 2 else 10):
        problem = random_problem(rng, m=m, horizon=int(rng.integers(0, 4)))
        fee = float(rng.uniform(0, 1)) if rng.random() < 0.5 else 0.0
        sol = solve_finite(problem, flat_fee=fee)
        for mu in rng.dirichlet(np.ones(m), 5):
            assert sol.value(0, mu) == pytest.approx(_oracle_value(problem, list(mu), fee), abs=1e-9)


def test_decide_matches_choices(rng):
    problem = random_problem(rng, horizon=3)
    sol = solve_finite(problem)
    for n, layer in enumerate(sol.layers):
        codes = layer.choices(GRID)
        for mu, code in zip(GRID[::20], codes[::20]):
            assert layer.decide(mu).code == code


def test_infinite_uninformative_stops_everywhere():
    problem = StoppingProblem([[6, -8]], 0.9, None, [0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]])
    sol = solve_infinite(problem)
    np.testing.assert_allclose(sol.value.evaluate(GRID), np.maximum(GRID @ [6, -8], 0), atol=1e-9)
    assert np.all(sol.layer.choices(GRID[GRID @ [6, -8] >= 0]) == STOP)


def test_infinite_example4_s():
    sol = solve_infinite(example4(0.6))
    assert sol.threshold == pytest.approx(0.66, abs=0.01)
    assert sol.value.evaluate(np.array([[0.57, 0.43]]))[0] > 14


def test_infinite_close_to_long_horizon(rng):
    problem = random_problem(rng, infinite=True, scale=1.0)
    inf = solve_infinite(problem)
    fin = solve_finite(problem.replace(horizon=30))
    bound = problem.discount ** 30 * problem.payoff_bound / (1 - problem.discount)
    assert np.max(np.abs(inf.value.evaluate(GRID) - fin.layers[0].value.evaluate(GRID))) <= bound + 1e-8


def test_sweep_cap_raises():
    with pytest.raises(NonConvergence):
        solve_infinite(example4(0.6), max_sweeps=3)


def test_infinite_rejects_undiscounted():
    problem = StoppingProblem([[6, -8]], 1.0, 3, [0.5, 0.5], [[0.7, 0.3], [0.3, 0.7]])
    with pytest.raises(ValueError):
        solve_infinite(problem)


def test_wait_option_for_moving_states():
    tau = [[0.6, 0.4], [0.4, 0.6]]
    problem = StoppingProblem([[10, -10]], 0.95, 3, [0.1, 0.9], [[0.55, 0.45], [0.45, 0.55]],
                              include_outside_option=True, transition=tau)
    sol = solve_finite(problem, wait=True)
    codes = set(np.concatenate([layer.choices(GRID) for layer in sol.layers]).tolist())
    assert WAIT in codes or ACQUIRE in codes
