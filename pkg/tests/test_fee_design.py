import numpy as np
import pytest

from conftest import example4, random_problem
from oracles import tree_oracle
from stopval import (
    CounterexampleFound,
    ExplicitTree,
    Flat,
    InvalidDiscount,
    Schedule,
    StoppingProblem,
    Timing,
    TreeFeeSampler,
    TreeTooLarge,
    Upfront,
    Zero,
    evaluate_fee,
    optimal_delayed_lump,
    solve_finite,
    solve_history_tree,
    supremum_check,
    timing_transform,
    value_of_information,
)


def _oracle(problem, fee):
    kappa = problem.discount if fee.timing is Timing.NEXT_PERIOD else 1.0
    return tree_oracle(
        problem.payoffs.tolist(), problem.include_outside_option, problem.discount, problem.horizon,
        problem.prior.tolist(), problem.info.likelihoods.tolist(),
        fee=lambda h: fee.charge(len(h), h), root_fee=fee.root_charge(problem.discount), kappa=kappa,
    )


def test_tree_matches_oracle_under_random_fees(rng):
    for _ in range(60):
        problem = random_problem(rng, horizon=int(rng.integers(1, 4)))
        phi = value_of_information(problem)
        fee = TreeFeeSampler(problem.horizon, problem.signal_count, max(2 * phi, 0.1))(rng)
        ev = evaluate_fee(problem, fee)
        root, accepted, gross, paid = _oracle(problem, fee)
        assert ev.dm_value == pytest.approx(root, abs=1e-9)
        assert ev.accepted == accepted
        assert ev.gross_value == pytest.approx(gross, abs=1e-9)
        assert ev.expected_total_fee == pytest.approx(paid, abs=1e-9)


def test_zero_fee_tree_equals_pwlc(rng):
    for _ in range(20):
        problem = random_problem(rng, horizon=int(rng.integers(0, 5)))
        tree = solve_history_tree(problem)
        assert tree.root_value == pytest.approx(solve_finite(problem).value(0), abs=1e-9)


def test_upfront_above_phi_is_declined(example2):
    phi = value_of_information(example2)
    assert not solve_history_tree(example2, Upfront(phi + 1e-6)).accepted
    # exact indifference is a refusal
    assert not evaluate_fee(example2, Upfront(phi)).accepted


def test_prohibitive_fee(example2):
    ev = evaluate_fee(example2, Flat(1e6))
    assert not ev.accepted and ev.dm_value == -1.0 and ev.expected_total_fee == 0
    with_outside = example2.replace(include_outside_option=True)
    tree = solve_history_tree(with_outside, Flat(1e6))
    assert tree.root_value == max(-1.0, 0.0)
    assert all(not tree.node(h).decision.kind == "acquire" for h in [(), (0,), (1,), (0, 1)])


def test_evaluation_examples(example2):
    zero = evaluate_fee(example2, Zero())
    v0 = solve_finite(example2).value(0)
    assert zero.expected_total_fee == 0 and zero.dm_value == pytest.approx(v0) and zero.gross_value == pytest.approx(v0)
    phi = value_of_information(example2)
    up = evaluate_fee(example2, Upfront(0.5 * phi))
    assert up.accepted and up.expected_total_fee == pytest.approx(0.5 * phi)
    assert up.dm_value == pytest.approx(v0 - 0.5 * phi)
    assert evaluate_fee(example2, Flat(0.05)).expected_total_fee < phi


def test_upfront_keeps_policy(rng):
    for _ in range(20):
        problem = random_problem(rng)
        phi = value_of_information(problem)
        if phi <= 1e-6:
            continue
        base = solve_history_tree(problem)
        taxed = solve_history_tree(problem, Upfront(phi * rng.uniform(0, 0.999)))
        assert taxed.decisions_match(base)


def test_timing_equivalence(rng):
    for _ in range(30):
        problem = random_problem(rng)
        fee = TreeFeeSampler(problem.horizon, problem.signal_count, 1.0, mixed_timing=True)(rng)
        a = evaluate_fee(problem, fee)
        b = evaluate_fee(problem, timing_transform(fee, problem.discount))
        for field in ("dm_value", "gross_value", "expected_total_fee"):
            assert getattr(a, field) == pytest.approx(getattr(b, field), abs=1e-9)
        assert a.accepted == b.accepted


def test_schedule_matches_flat_solver(rng):
    problem = random_problem(rng, horizon=3)
    tree = solve_history_tree(problem, Schedule((0.0, 0.3, 0.3, 0.3)))
    assert tree.root_value == pytest.approx(solve_finite(problem, flat_fee=0.3).value(0), abs=1e-9)


def test_value_of_information_examples():
    blind = StoppingProblem([[6, -8]], 0.9, 3, [0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]], include_outside_option=True)
    assert value_of_information(blind) == 0
    sure = StoppingProblem([[6, -8]], 0.9, 3, [1.0, 0.0], [[0.7, 0.3], [0.3, 0.7]])
    assert value_of_information(sure) == 0
    problem = example4(0.6)
    assert value_of_information(problem) > 0


def test_supremum_check(example2):
    empty = supremum_check(example2, trials=0)
    assert empty.accepted == 0 and empty.gap == float("inf")
    report = supremum_check(example2, trials=1000, seed=1)
    assert report.accepted > 900
    assert report.max_fee <= report.phi + 1e-9
    assert report.max_decomposition_residual <= 1e-9
    phi = report.phi
    near = supremum_check(example2, sampler=lambda rng: Upfront(phi - 1e-6), trials=1)
    assert near.gap == pytest.approx(1e-6, abs=1e-12)


def test_supremum_check_flags_bad_evaluations(example2, monkeypatch):
    import stopval.fee_design as fd

    monkeypatch.setattr(fd, "value_of_information", lambda problem: 0.0)
    with pytest.raises(CounterexampleFound) as info:
        supremum_check(example2, sampler=lambda rng: Upfront(0.5), trials=1)
    assert info.value.rho == pytest.approx(0.5)


def test_tree_budget(example2):
    big = example2.replace(horizon=25)
    with pytest.raises(TreeTooLarge):
        solve_history_tree(big)


def test_node_access(example2):
    tree = solve_history_tree(example2, ExplicitTree({(0,): 0.2, (0, 1): 0.1}))
    node = tree.node((0, 1))
    assert node.period == 2 and node.fee == 0.1
    np.testing.assert_allclose(node.belief, [0.5, 0.5])


def test_delayed_lump():
    assert optimal_delayed_lump(1, 0.9, 0.9, 10) == (0, 1.0, 1.0)
    K, pay, value = optimal_delayed_lump(1, 0.8, 0.9, 2)
    assert K == 2 and pay == pytest.approx(1.5625) and value == pytest.approx(1.265625)
    assert optimal_delayed_lump(0, 0.5, 0.9, 4)[1:] == (0.0, 0.0)
    assert optimal_delayed_lump(1, 0.8, 0.9, 0) == (0, 1.0, 1.0)
    for bad in ((1, 0.0, 0.9, 2), (1, 0.9, 1.2, 2)):
        with pytest.raises(InvalidDiscount):
            optimal_delayed_lump(*bad)


def test_delayed_lump_is_a_discounted_upfront(example2):
    from stopval import DelayedLump

    phi = value_of_information(example2)
    ev = evaluate_fee(example2, DelayedLump(2, 0.99 * phi / 0.81))
    assert ev.accepted and ev.expected_total_fee == pytest.approx(0.99 * phi)
