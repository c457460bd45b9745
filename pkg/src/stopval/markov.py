"""Markovian state of nature: stop, wait without information, or acquire.

A signal bought in period n is about the period-(n+1) state, so beliefs are
first pushed through the transition and then updated. Paths through the
tree record ``None`` for a period spent waiting and the signal index for a
period spent acquiring; fees only see the signals (the relevant history).
"""

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .belief import bayes_update, markov_push, signal_marginal
from .errors import TreeTooLarge, ValidationError
from .fees import FeeScheme, Zero
from .problem import TIE_TOL, stopping_payoff
from .solver import Decision
from .tree import DEFAULT_TREE_BUDGET


def rejection_value(problem):
    """Best payoff without information: act now, or act after ``n`` transitions."""
    if problem.is_infinite:
        raise ValidationError("the rejection value needs a finite horizon")
    best, _ = stopping_payoff(problem.prior, problem)
    mu = problem.prior
    for n in range(1, problem.horizon + 1):
        mu = mu @ problem.transition_matrix
        value, _ = stopping_payoff(mu, problem)
        best = max(best, problem.discount ** n * value)
    return float(best)


@dataclass
class MarkovPolicyNode:
    period: int
    path: tuple  # None marks a waiting period
    belief: np.ndarray
    reach: float
    decision: Decision
    value: float
    gross_value: float
    expected_fee: float
    options: Dict[str, float] = field(default_factory=dict)  # "stop", "wait", "acquire"

    @property
    def history(self):
        """Signals the decision-maker actually observed."""
        return tuple(s for s in self.path if s is not None)

    @property
    def signals_used(self):
        return len(self.history)


@dataclass
class MarkovSolution:
    problem: object
    fee: FeeScheme
    nodes: Dict[tuple, MarkovPolicyNode]
    rejection_value: float
    max_signals: Optional[int]

    @property
    def root(self):
        return self.nodes[()]

    @property
    def root_value(self):
        return self.root.value

    @property
    def accepted(self):
        """Weak acceptance: the best engaged option matches or beats rejecting."""
        engaged = [v for key, v in self.root.options.items() if key != "stop"]
        return bool(engaged) and max(engaged) >= self.rejection_value - TIE_TOL

    def node(self, path=()):
        return self.nodes[tuple(path)]


def solve_markov(problem, fee: Optional[FeeScheme] = None, max_signals=None, budget=DEFAULT_TREE_BUDGET):
    """Three-way backward induction over the wait/acquire path tree.

    At the root, "stop" means rejecting the scheme and is worth the
    rejection value; waiting and acquiring both pay the acceptance charge.
    `max_signals` caps the number of acquisitions along any path.
    """
    if problem.is_infinite:
        raise ValidationError("the Markov tree needs a finite horizon")
    fee = Zero() if fee is None else fee
    S = problem.info
    tau = problem.transition_matrix
    k = problem.signal_count
    d = problem.discount
    kappa = fee.payment_discount(d)
    N = problem.horizon
    reject = rejection_value(problem)
    cap = np.inf if max_signals is None else int(max_signals)
    nodes: Dict[tuple, MarkovPolicyNode] = {}

    def visit(path, n, mu, reach):
        if len(nodes) >= budget:
            raise TreeTooLarge(f"the Markov tree exceeded the budget of {budget} nodes")
        pi, action = stopping_payoff(mu, problem)
        if n == N:
            if pi >= 0.0:
                node = MarkovPolicyNode(n, path, mu, reach, Decision("stop", action), pi, pi, 0.0, {"stop": pi})
            else:
                node = MarkovPolicyNode(n, path, mu, reach, Decision("exit"), 0.0, 0.0, 0.0, {"stop": pi})
            nodes[path] = node
            return node
        root_charge = fee.root_charge(d) if n == 0 else 0.0
        stop_value = reject if n == 0 else pi
        options = {"stop": stop_value}
        outcomes = {}

        pushed = markov_push(mu, tau)
        child = visit(path + (None,), n + 1, pushed, reach)
        options["wait"] = float(d * child.value - root_charge)
        outcomes["wait"] = (d * child.gross_value, d * child.expected_fee + root_charge)

        used = sum(s is not None for s in path)
        if used < cap:
            alpha = signal_marginal(pushed, S)
            value = gross = paid = 0.0
            history = tuple(s for s in path if s is not None)
            for s in range(k):
                if alpha[s] <= 0.0:
                    continue
                post = bayes_update(pushed, S, s)
                child = visit(path + (s,), n + 1, post, reach * alpha[s])
                charge = fee.charge(n + 1, history + (s,))
                value += alpha[s] * (d * child.value - kappa * charge)
                gross += alpha[s] * d * child.gross_value
                paid += alpha[s] * (kappa * charge + d * child.expected_fee)
            options["acquire"] = float(value - root_charge)
            outcomes["acquire"] = (gross, paid + root_charge)

        # ties favour stopping, then waiting
        best = "stop"
        for key in ("wait", "acquire"):
            if key in options and options[key] > options[best] + TIE_TOL:
                best = key
        if best == "stop":
            decision = Decision("stop", action) if n > 0 or stop_value == pi else Decision("stop")
            node = MarkovPolicyNode(n, path, mu, reach, decision, stop_value, stop_value, 0.0, options)
        else:
            gross, paid = outcomes[best]
            node = MarkovPolicyNode(n, path, mu, reach, Decision(best), options[best], gross, paid, options)
        nodes[path] = node
        return node

    visit((), 0, problem.prior, 1.0)
    return MarkovSolution(problem, fee, nodes, reject, None if max_signals is None else int(max_signals))


def markov_value_of_information(problem, max_signals=None):
    """``max(0, V_0 - Pi(mu_0))`` with free information."""
    solution = solve_markov(problem, Zero(), max_signals=max_signals)
    return max(0.0, solution.root_value - solution.rejection_value)
