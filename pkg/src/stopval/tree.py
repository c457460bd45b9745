"""Exact backward induction over the full signal-history tree.

Needed whenever fees depend on the history, because the belief is then no
longer a sufficient state. Level n of the tree holds ``k**n`` nodes; the
child of node ``i`` through signal ``s`` is node ``i*k + s`` of level n+1, so
a history ``(s_1, ..., s_n)`` is its base-k index.
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import TreeTooLarge, ValidationError
from .fees import FeeScheme, Timing, Zero
from .problem import TIE_TOL
from .solver import ACQUIRE, EXIT, STOP, Decision

DEFAULT_TREE_BUDGET = 1_000_000


def tree_size(signal_count, horizon):
    return sum(signal_count ** n for n in range(horizon + 1))


def check_budget(nodes, budget):
    if nodes > budget:
        raise TreeTooLarge(f"the history tree needs {nodes} nodes, above the budget of {budget}")


@dataclass(frozen=True, eq=False)
class BeliefLevels:
    """Beliefs, reach probabilities and stopping payoffs for every history.

    Depends only on the problem, so it can be shared between fee schemes.
    Zero-probability histories inherit their parent's belief and have
    reach 0.
    """

    beliefs: List[np.ndarray]  # level n: (k**n, m)
    reach: List[np.ndarray]  # level n: (k**n,)
    marginals: List[np.ndarray]  # level n: (k**n, k), signal probabilities at each node
    payoff: List[np.ndarray]  # level n: best stopping payoff
    action: List[np.ndarray]  # level n: its action index

    @classmethod
    def build(cls, problem, budget=DEFAULT_TREE_BUDGET):
        if problem.is_infinite:
            raise ValidationError("the history tree needs a finite horizon")
        lik = problem.info.likelihoods
        k = lik.shape[1]
        check_budget(tree_size(k, problem.horizon), budget)
        tau = problem.transition_matrix
        stop = problem.stop_alphas
        beliefs, reach, marginals, payoff, action = [], [], [], [], []
        mu = problem.prior[None, :]
        r = np.ones(1)
        for n in range(problem.horizon + 1):
            values = mu @ stop.T
            beliefs.append(mu)
            reach.append(r)
            payoff.append(values.max(axis=1))
            action.append(values.argmax(axis=1))
            pushed = mu @ tau
            alpha = pushed @ lik  # (nodes, k)
            marginals.append(alpha)
            if n == problem.horizon:
                break
            joint = pushed[:, None, :] * lik.T[None, :, :]  # (nodes, k, m)
            with np.errstate(invalid="ignore", divide="ignore"):
                post = joint / alpha[:, :, None]
            dead = alpha <= 0.0
            post[dead] = np.broadcast_to(pushed[:, None, :], joint.shape)[dead]
            post /= post.sum(axis=2, keepdims=True)
            mu = post.reshape(-1, problem.state_count)
            r = (r[:, None] * alpha).reshape(-1)
        return cls(beliefs, reach, marginals, payoff, action)


@dataclass(frozen=True)
class HistoryNode:
    history: tuple
    period: int
    belief: np.ndarray
    reach: float
    value: float
    gross_value: float
    decision: Decision
    fee: float  # c(h) for this history (the root reports the acceptance charge)


@dataclass(eq=False)
class HistoryTree:
    """Solved tree: values and decisions at every history under one fee scheme.

    `values[n]`, `codes[n]` and `gross[n]` are arrays over level n. Gross
    values replay the same decisions with every fee set to zero.
    """

    problem: object
    fee: FeeScheme
    levels: BeliefLevels
    values: List[np.ndarray]
    codes: List[np.ndarray]
    gross: List[np.ndarray]
    expected_total_fee: float
    root_charge: float

    @property
    def horizon(self):
        return self.problem.horizon

    @property
    def signal_count(self):
        return self.problem.signal_count

    @property
    def root_value(self):
        return float(self.values[0][0])

    @property
    def accepted(self):
        return bool(self.codes[0][0] == ACQUIRE)

    @property
    def gross_value(self):
        return float(self.gross[0][0])

    @property
    def node_count(self):
        return sum(v.size for v in self.values)

    def index(self, history):
        index = 0
        for s in history:
            if not 0 <= s < self.signal_count:
                raise ValidationError(f"signal index {s} out of range")
            index = index * self.signal_count + int(s)
        return index

    def node(self, history=()):
        history = tuple(history)
        n = len(history)
        if n > self.horizon:
            raise ValidationError(f"history longer than the horizon {self.horizon}")
        i = self.index(history)
        code = int(self.codes[n][i])
        if code == STOP:
            decision = Decision("stop", int(self.levels.action[n][i]))
        elif code == EXIT:
            decision = Decision("exit")
        else:
            decision = Decision("acquire")
        fee = self.root_charge if n == 0 else float(self.fee.level_charges(n, self.signal_count)[i])
        return HistoryNode(
            history,
            n,
            self.levels.beliefs[n][i],
            float(self.levels.reach[n][i]),
            float(self.values[n][i]),
            float(self.gross[n][i]),
            decision,
            fee,
        )

    def decisions_match(self, other, include_root=True):
        """True when both trees make the same choice at every reachable history."""
        start = 0 if include_root else 1
        for n in range(start, self.horizon + 1):
            live = self.levels.reach[n] > 0
            if not np.array_equal(self.codes[n][live], other.codes[n][live]):
                return False
        return True


def solve_history_tree(problem, fee: Optional[FeeScheme] = None, budget=DEFAULT_TREE_BUDGET, levels=None):
    """Backward induction with history-dependent fees.

    Period-n continuation value at history h is
    ``delta * E[V(h, s)] - kappa * E[c(h, s)]`` where ``kappa`` is `delta`
    for next-period payment and 1 for immediate payment. At the root the
    acceptance charge is subtracted as well and the scheme is accepted only
    when the result strictly beats immediate stopping.
    """
    fee = Zero() if fee is None else fee
    if levels is None:
        levels = BeliefLevels.build(problem, budget)
    N = problem.horizon
    k = problem.signal_count
    d = problem.discount
    kappa = fee.payment_discount(d)
    root_charge = float(fee.root_charge(d))

    charges = [None] + [np.asarray(fee.level_charges(n, k), dtype=float) for n in range(1, N + 1)]
    values = [None] * (N + 1)
    codes = [None] * (N + 1)
    gross = [None] * (N + 1)

    pi = levels.payoff[N]
    values[N] = np.maximum(pi, 0.0)
    codes[N] = np.where(pi >= 0.0, STOP, EXIT)
    gross[N] = values[N]
    for n in range(N - 1, -1, -1):
        alpha = levels.marginals[n]
        pi = levels.payoff[n]
        cont = d * np.sum(alpha * values[n + 1].reshape(-1, k), axis=1)
        cont -= kappa * np.sum(alpha * charges[n + 1].reshape(-1, k), axis=1)
        if n == 0:
            cont = cont - root_charge
        acquire = cont > pi + TIE_TOL
        values[n] = np.where(acquire, cont, pi)
        codes[n] = np.where(acquire, ACQUIRE, STOP)
        gross_cont = d * np.sum(alpha * gross[n + 1].reshape(-1, k), axis=1)
        gross[n] = np.where(acquire, gross_cont, pi)

    # forward pass: fees actually paid along histories where every ancestor acquired
    rho = root_charge if codes[0][0] == ACQUIRE else 0.0
    on_path = codes[0] == ACQUIRE
    pay_discount = 1.0 if fee.timing is Timing.NEXT_PERIOD else 1.0 / d
    for n in range(1, N + 1):
        paid_here = np.repeat(on_path, k)
        pay_discount *= d
        rho += pay_discount * float(np.sum(levels.reach[n][paid_here] * charges[n][paid_here]))
        on_path = paid_here & (codes[n] == ACQUIRE)
    return HistoryTree(problem, fee, levels, values, codes, gross, float(rho), root_charge)
