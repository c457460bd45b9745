"""Buying several conditionally independent signals per period under a total quota.

A history here is a tuple of batches, one per elapsed period, each batch
being the tuple of signals bought in that period (``()`` when none were).
"""

from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Optional

import numpy as np

from .errors import TreeTooLarge, ValidationError
from .fees import FeeScheme, Zero
from .problem import TIE_TOL, stopping_payoff
from .solver import Decision
from .tree import DEFAULT_TREE_BUDGET


@dataclass
class QuotaNode:
    history: tuple
    period: int
    quota: int  # signals still available
    belief: np.ndarray
    reach: float
    value: float
    gross_value: float
    expected_fee: float  # fees paid from here on, valued at this period
    decision: Decision
    batch: int  # signals bought now (0 when stopping or waiting)
    options: Dict[int, float] = field(default_factory=dict)  # batch size -> continuation value


@dataclass
class QuotaSolution:
    problem: object
    per_period_cap: int
    quota: int
    fee: FeeScheme
    nodes: Dict[tuple, QuotaNode]

    @property
    def root(self):
        return self.nodes[()]

    @property
    def root_value(self):
        return self.root.value

    @property
    def accepted(self):
        return not self.root.decision.stops

    def node(self, history=()):
        return self.nodes[tuple(tuple(b) for b in history)]


def _batch_outcomes(belief, lik, size):
    """``(batch, probability, posterior)`` for every ordered batch of `size` signals."""
    if size == 0:
        yield (), 1.0, belief
        return
    for batch in product(range(lik.shape[1]), repeat=size):
        joint = belief * np.prod(lik[:, batch], axis=1)
        total = joint.sum()
        if total <= 0.0:
            continue
        yield batch, float(total), joint / total


def solve_multi_signal(problem, per_period_cap, total_quota, fee: Optional[FeeScheme] = None,
                       budget=DEFAULT_TREE_BUDGET):
    """Backward induction over (period, history, remaining quota).

    With quota left the decision-maker stops or buys ``1..min(K, q)``
    signals, paying one fee per batch. With the quota exhausted she stops
    or lets a period pass without information.
    """
    if problem.is_infinite:
        raise ValidationError("the quota model needs a finite horizon")
    K, L = int(per_period_cap), int(total_quota)
    if K < 1 or L < 0:
        raise ValidationError("need a per-period cap K >= 1 and a quota L >= 0")
    fee = Zero() if fee is None else fee
    lik = problem.info.likelihoods
    tau = problem.transition_matrix
    d = problem.discount
    kappa = fee.payment_discount(d)
    N = problem.horizon
    nodes: Dict[tuple, QuotaNode] = {}

    def visit(history, n, q, mu, reach):
        if len(nodes) >= budget:
            raise TreeTooLarge(f"the quota tree exceeded the budget of {budget} nodes")
        pi, action = stopping_payoff(mu, problem)
        if n == N:
            if pi >= 0.0:
                node = QuotaNode(history, n, q, mu, reach, pi, pi, 0.0, Decision("stop", action), 0)
            else:
                node = QuotaNode(history, n, q, mu, reach, 0.0, 0.0, 0.0, Decision("exit"), 0)
            nodes[history] = node
            return node
        pushed = mu @ tau
        sizes = range(1, min(K, q) + 1) if q > 0 else [0]
        best = None
        options = {}
        for size in sizes:
            value = gross = paid = 0.0
            for batch, prob, post in _batch_outcomes(pushed, lik, size):
                child_history = history + (batch,)
                child = visit(child_history, n + 1, q - size, post, reach * prob)
                charge = fee.charge(n + 1, child_history) if size else 0.0
                value += prob * (d * child.value - kappa * charge)
                gross += prob * d * child.gross_value
                paid += prob * (kappa * charge + d * child.expected_fee)
            if n == 0:
                root = fee.root_charge(d)
                value -= root
                paid += root
            options[size] = value
            if best is None or value > best[1] + TIE_TOL:
                best = (size, value, gross, paid)
        if best[1] > pi + TIE_TOL:
            size, value, gross, paid = best
            decision = Decision("acquire" if size else "wait")
            node = QuotaNode(history, n, q, mu, reach, value, gross, paid, decision, size, options)
        else:
            node = QuotaNode(history, n, q, mu, reach, pi, pi, 0.0, Decision("stop", action), 0, options)
        nodes[history] = node
        return node

    visit((), 0, L, problem.prior, 1.0)
    return QuotaSolution(problem, K, L, fee, nodes)


def allocation_value(problem, allocation):
    """Zero-fee value of a fixed purchase plan ``allocation[n]`` (signals in period n)
    with optimal stopping on top."""
    N = problem.horizon
    if len(allocation) > N:
        raise ValidationError("allocation longer than the horizon")
    plan = list(allocation) + [0] * (N - len(allocation))
    lik = problem.info.likelihoods
    tau = problem.transition_matrix
    d = problem.discount

    def value(n, mu):
        pi, _ = stopping_payoff(mu, problem)
        if n == N:
            return max(pi, 0.0)
        pushed = mu @ tau
        cont = sum(prob * d * value(n + 1, post) for _, prob, post in _batch_outcomes(pushed, lik, plan[n]))
        return max(pi, cont)

    return value(0, problem.prior)

