"""Fee evaluation, the value of an information structure and fee-design helpers."""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import CounterexampleFound, InvalidDiscount, StopvalError
from .fees import FeeScheme, TreeFeeSampler, Upfront
from .problem import stopping_payoff
from .solver import solve_finite, solve_infinite
from .tree import DEFAULT_TREE_BUDGET, BeliefLevels, solve_history_tree

DECOMPOSITION_TOL = 1e-9
AUDIT_TOL = 1e-9


@dataclass(frozen=True)
class FeeEvaluation:
    accepted: bool
    dm_value: float  # V_0 under the scheme (equals the stopping payoff when declined)
    gross_value: float  # same decisions, no fees
    expected_total_fee: float
    stopping_payoff: float

    @property
    def decomposition_residual(self):
        return abs(self.dm_value - (self.gross_value - self.expected_total_fee))


def _evaluation_from_tree(tree):
    pi0 = float(tree.levels.payoff[0][0])
    result = FeeEvaluation(
        accepted=tree.accepted,
        dm_value=tree.root_value,
        gross_value=tree.gross_value,
        expected_total_fee=tree.expected_total_fee,
        stopping_payoff=pi0,
    )
    scale = max(1.0, abs(result.gross_value), abs(result.expected_total_fee))
    if result.decomposition_residual > DECOMPOSITION_TOL * scale:
        raise StopvalError(
            f"value decomposition violated by {result.decomposition_residual:.3g}; this is a solver bug"
        )
    return result


def evaluate_fee(problem, fee: FeeScheme, budget=DEFAULT_TREE_BUDGET, levels=None):
    """Solve the history tree under `fee` and report value, gross value and expected fees."""
    return _evaluation_from_tree(solve_history_tree(problem, fee, budget=budget, levels=levels))


def zero_fee_value(problem):
    """Period-0 value at the prior when information is free."""
    if problem.is_infinite:
        return solve_infinite(problem).value(problem.prior)
    return solve_finite(problem).value(0)


def value_of_information(problem):
    """Largest upfront fee the decision-maker would pay: ``max(0, V_0 - pi(mu_0))``."""
    pi0, _ = stopping_payoff(problem.prior, problem)
    return max(0.0, zero_fee_value(problem) - pi0)


@dataclass
class SupremumReport:
    phi: float
    trials: int
    accepted: int
    attempts: int
    max_fee: float  # largest expected total fee among accepted samples
    max_decomposition_residual: float
    worst_scheme: Optional[FeeScheme] = None

    @property
    def gap(self):
        """``phi`` minus the best sampled expected fee (``inf`` with no samples)."""
        return self.phi - self.max_fee if self.accepted else float("inf")


def supremum_check(
    problem,
    sampler: Optional[Callable] = None,
    trials=1000,
    seed=0,
    max_attempts_per_trial=1000,
    budget=DEFAULT_TREE_BUDGET,
    fee_scale=None,
):
    """Sample accepted fee schemes and confirm none extracts more than ``phi``.

    Each trial uses its own generator derived from `seed` and the trial
    index, drawing schemes from `sampler(rng)` until one is accepted (or the
    attempt cap is hit, in which case the trial is skipped). Raises
    CounterexampleFound if any accepted scheme has an expected fee above
    ``phi + 1e-9``.
    """
    phi = value_of_information(problem)
    report = SupremumReport(phi, trials, 0, 0, -np.inf, 0.0)
    if trials <= 0:
        return report
    levels = BeliefLevels.build(problem, budget)
    if sampler is None:
        scale = fee_scale if fee_scale is not None else 2.0 * phi
        sampler = TreeFeeSampler(problem.horizon, problem.signal_count, max(scale, 1e-12))
    children = np.random.SeedSequence(seed).spawn(trials)
    for child in children:
        rng = np.random.default_rng(child)
        for _ in range(max_attempts_per_trial):
            report.attempts += 1
            scheme = sampler(rng)
            evaluation = evaluate_fee(problem, scheme, levels=levels)
            if not evaluation.accepted:
                continue
            report.accepted += 1
            report.max_decomposition_residual = max(
                report.max_decomposition_residual, evaluation.decomposition_residual
            )
            rho = evaluation.expected_total_fee
            if rho > report.max_fee:
                report.max_fee = rho
                report.worst_scheme = scheme
            if rho > phi + AUDIT_TOL:
                raise CounterexampleFound(
                    f"accepted scheme extracts {rho!r} > phi = {phi!r}", scheme, rho, phi
                )
            break
    return report


def optimal_delayed_lump(phi, delta_dm, delta_ip, K_bar):
    """Best single delayed payment when the provider discounts at `delta_ip`.

    Returns ``(K, payment, provider_value)``. With a patient provider the
    payment is pushed to the latest allowed period ``K_bar``; otherwise the
    upfront fee is kept. Without a cap on the delay the patient provider's
    value grows without bound, which is why `K_bar` is required.
    """
    for name, value in (("delta_dm", delta_dm), ("delta_ip", delta_ip)):
        if not 0.0 < value <= 1.0:
            raise InvalidDiscount(f"{name} must lie in (0, 1], got {value}")
    if phi < 0:
        raise ValueError("phi must be non-negative")
    if int(K_bar) != K_bar or K_bar < 0:
        raise ValueError("K_bar must be a non-negative integer")
    if delta_ip <= delta_dm or K_bar == 0:
        return 0, float(phi), float(phi)
    K = int(K_bar)
    return K, phi / delta_dm ** K, (delta_ip / delta_dm) ** K * phi


def upfront_scheme(problem, margin=0.0):
    """The upfront fee ``phi - margin`` (clamped at 0)."""
    return Upfront(max(0.0, value_of_information(problem) - margin))

