"""Finite- and infinite-horizon dynamic programming with exact PWLC backups.

For fee schemes that are constant across histories the value function only
depends on the belief, so each period is an exact alpha-vector set.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import NonConvergence
from .problem import TIE_TOL, StoppingProblem, stopping_payoff
from .pwlc import PwlcValue, constant, cross_sum, pointwise_max, prune, sup_distance, union


# choice codes used by the vectorised policy queries
STOP, ACQUIRE, WAIT, EXIT = 0, 1, 2, 3
_KIND_CODES = {"stop": STOP, "acquire": ACQUIRE, "wait": WAIT, "exit": EXIT}


@dataclass(frozen=True)
class Decision:
    kind: str  # "stop", "acquire", "wait" or "exit"
    action: Optional[int] = None

    @property
    def stops(self):
        return self.kind in ("stop", "exit")

    @property
    def code(self):
        return _KIND_CODES[self.kind]


def stop_value(problem):
    alphas = problem.stop_alphas
    return PwlcValue(alphas, tuple(("stop", a) for a in range(alphas.shape[0])))


def terminal_value(problem):
    """``max{pi, 0}``: waiting past the horizon earns the outside payoff."""
    return prune(union(stop_value(problem), constant(0.0, problem.state_count)))


def continuation(next_value, problem, flat_fee=0.0, wait=False):
    """Value of acquiring one more signal, as a pruned alpha set.

    Builds ``delta * sum_s tau (f_s * alpha_{choice(s)})`` over all signal-wise
    choices, then subtracts the discounted fee. With `wait`, the option of
    letting one period pass without a signal (``delta * tau alpha``, no fee)
    is merged in; it wins exact ties against acquiring.
    """
    lik = problem.info.likelihoods
    tau_t = problem.transition_matrix.T
    d = problem.discount
    total = None
    for s in range(lik.shape[1]):
        branch = d * (next_value.alphas * lik[:, s]) @ tau_t
        branch = prune(PwlcValue(branch, (("acquire",),) * branch.shape[0]))
        total = branch if total is None else cross_sum(total, branch)
    if flat_fee:
        total = PwlcValue(total.alphas - d * flat_fee, total.tags)
    if wait:
        idle = d * next_value.alphas @ tau_t
        total = pointwise_max(PwlcValue(idle, (("wait",),) * idle.shape[0]), total)
    return total


def backup(next_value, problem, flat_fee=0.0, wait=False):
    """One Bellman step: ``max{pi, delta * (E[next(mu(s))] - fee)}``."""
    return pointwise_max(stop_value(problem), continuation(next_value, problem, flat_fee, wait))


def _invest_interval(line, rivals):
    """Beliefs mu in [0, 1] (probability of the first state) where `line`
    is within TIE_TOL of beating every rival line."""
    lo, hi = 0.0, 1.0
    for rival in rivals:
        diff = line - rival
        # diff(mu) = diff[1] + (diff[0] - diff[1]) * mu >= -TIE_TOL
        a = diff[0] - diff[1]
        b = diff[1] + TIE_TOL
        if a > 0:
            lo = max(lo, -b / a)
        elif a < 0:
            hi = min(hi, -b / a)
        elif b < 0:
            return None
    if lo > hi:
        return None
    return lo, hi


@dataclass(frozen=True, eq=False)
class PolicyLayer:
    """Value and policy for one period.

    `continuation` is the value of acquiring (or, on the terminal layer, the
    exit payoff 0). The stop region is where stopping is at least as good as
    continuing, so indifference counts as stopping.
    """

    period: Optional[int]
    value: PwlcValue
    continuation: PwlcValue
    problem: StoppingProblem
    terminal: bool = False
    threshold: Optional[float] = field(default=None)
    orientation: Optional[str] = field(default=None)

    def decide(self, mu):
        pi, action = stopping_payoff(mu, self.problem)
        if self.terminal:
            if pi >= 0.0:
                return Decision("stop", action)
            return Decision("exit")
        value, tag = self.continuation.best(mu)
        if value > pi + TIE_TOL:
            return Decision(tag[0])
        return Decision("stop", action)

    def acquire_mask(self, beliefs):
        """Vectorised indicator of continuing (acquiring or waiting) over rows of `beliefs`."""
        beliefs = np.asarray(beliefs, dtype=float)
        if self.terminal:
            return np.zeros(beliefs.shape[0], dtype=bool)
        pi = np.max(beliefs @ self.problem.stop_alphas.T, axis=1)
        return self.continuation.evaluate(beliefs) > pi + TIE_TOL

    def choices(self, beliefs):
        """Vectorised choice codes (STOP, ACQUIRE, WAIT, EXIT) over rows of `beliefs`."""
        beliefs = np.asarray(beliefs, dtype=float)
        pi = np.max(beliefs @ self.problem.stop_alphas.T, axis=1)
        if self.terminal:
            return np.where(pi >= 0.0, STOP, EXIT)
        codes = np.full(beliefs.shape[0], STOP)
        go = self.continuation.evaluate(beliefs) > pi + TIE_TOL
        if np.any(go):
            if any(t[0] == "wait" for t in self.continuation.tags):
                best = np.argmax(beliefs[go] @ self.continuation.alphas.T, axis=1)
                waits = np.array([t[0] == "wait" for t in self.continuation.tags])[best]
                codes[go] = np.where(waits, WAIT, ACQUIRE)
            else:
                codes[go] = ACQUIRE
        return codes

    @property
    def stop_tags(self):
        return tuple(t for t in self.value.tags if t[0] != "acquire")

    @property
    def acquire_tags(self):
        return tuple(t for t in self.value.tags if t[0] == "acquire")


def _make_layer(period, value, cont, problem, terminal):
    threshold = orientation = None
    u = problem.payoffs
    if problem.state_count == 2 and u.shape[0] == 1 and u[0, 0] != u[0, 1]:
        line = u[0]
        rivals = list(cont.alphas)
        if problem.include_outside_option:
            rivals.append(np.zeros(2))
        interval = _invest_interval(line, rivals)
        orientation = "up" if u[0, 0] > u[0, 1] else "down"
        if interval is not None:
            threshold = interval[0] if orientation == "up" else interval[1]
    return PolicyLayer(period, value, cont, problem, terminal, threshold, orientation)


@dataclass
class FiniteSolution:
    problem: StoppingProblem
    layers: List[PolicyLayer]  # layers[n] is period n

    @property
    def horizon(self):
        return len(self.layers) - 1

    def value(self, period=0, mu=None):
        mu = self.problem.prior if mu is None else mu
        return self.layers[period].value(mu)

    @property
    def thresholds(self):
        return [layer.threshold for layer in self.layers]

    def policy(self, period):
        return self.layers[period]


def solve_finite(problem, flat_fee=0.0, wait=False):
    """Backward induction from the terminal layer ``max{pi, 0}`` down to period 0."""
    if problem.is_infinite:
        raise ValueError("solve_finite needs a finite horizon")
    N = problem.horizon
    exit_line = constant(0.0, problem.state_count)
    value = terminal_value(problem)
    layers = [None] * (N + 1)
    layers[N] = _make_layer(N, value, exit_line, problem, terminal=True)
    for n in range(N - 1, -1, -1):
        cont = continuation(value, problem, flat_fee, wait)
        value = pointwise_max(stop_value(problem), cont)
        layers[n] = _make_layer(n, value, cont, problem, terminal=False)
    return FiniteSolution(problem, layers)


@dataclass
class InfiniteSolution:
    problem: StoppingProblem
    value: PwlcValue
    layer: PolicyLayer
    deltas: List[float]
    sweeps: int

    @property
    def threshold(self):
        return self.layer.threshold

    @property
    def continuation(self):
        return self.layer.continuation

    def policy(self, period=None):
        return self.layer


def solve_infinite(problem, tol=1e-8, max_sweeps=100_000, wait=False):
    """Value iteration to the unique fixed point of the stationary Bellman map.

    Stops once the exact sup-norm change is at most ``tol*(1-delta)/(2*delta)``,
    which bounds the distance to the fixed point by ``tol/2``.
    """
    d = problem.discount
    if d >= 1.0:
        raise ValueError("the infinite-horizon solver needs discount < 1")
    stop_tol = tol * (1.0 - d) / (2.0 * d)
    value = terminal_value(problem)
    deltas = []
    for sweep in range(1, max_sweeps + 1):
        cont = continuation(value, problem, wait=wait)
        new_value = pointwise_max(stop_value(problem), cont)
        delta = sup_distance(new_value, value)
        deltas.append(delta)
        value = new_value
        if delta <= stop_tol:
            layer = _make_layer(None, value, continuation(value, problem, wait=wait), problem, terminal=False)
            return InfiniteSolution(problem, value, layer, deltas, sweep)
    raise NonConvergence(f"no convergence after {max_sweeps} sweeps (last change {deltas[-1]:.3g})")
