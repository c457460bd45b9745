"""Beliefs, information structures, Bayesian updating and Blackwell comparison."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import InvalidGarbling, NotContractive, ValidationError, ZeroProbabilitySignal
from .lp import FEASIBILITY_TOL, solve_standard_form

SUM_TOL = 1e-12
ZERO_SIGNAL_TOL = 1e-15


def _check_stochastic_rows(matrix, what, error=ValidationError):
    if not np.all(np.isfinite(matrix)):
        raise error(f"{what} has non-finite entries")
    if np.any(matrix < 0):
        raise error(f"{what} has negative entries")
    sums = matrix.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > SUM_TOL):
        raise error(f"{what} rows must sum to 1 (got {np.round(sums, 15).tolist()})")


def as_belief(mu):
    """Validate `mu` as a probability vector and return it as a float array."""
    mu = np.array(mu, dtype=float)
    if mu.ndim != 1 or mu.size < 1:
        raise ValidationError("a belief must be a non-empty vector")
    _check_stochastic_rows(mu, "belief")
    return mu


@dataclass(frozen=True, eq=False)
class InfoStructure:
    """Signal likelihoods: ``likelihoods[theta, s]`` is the probability of s in state theta."""

    likelihoods: np.ndarray

    def __post_init__(self):
        lik = np.array(self.likelihoods, dtype=float, ndmin=2)
        if lik.ndim != 2:
            raise ValidationError("likelihoods must be a state-by-signal matrix")
        _check_stochastic_rows(lik, "information structure")
        lik.setflags(write=False)
        object.__setattr__(self, "likelihoods", lik)

    @property
    def state_count(self):
        return self.likelihoods.shape[0]

    @property
    def signal_count(self):
        return self.likelihoods.shape[1]

    def __eq__(self, other):
        if not isinstance(other, InfoStructure):
            return NotImplemented
        return np.array_equal(self.likelihoods, other.likelihoods)

    def __repr__(self):
        return f"InfoStructure({self.likelihoods.tolist()})"


@dataclass(frozen=True, eq=False)
class MarkovTransition:
    """Row-stochastic state transition; ``matrix[i, j]`` is P(theta_j next | theta_i now)."""

    matrix: np.ndarray

    def __post_init__(self):
        tau = np.array(self.matrix, dtype=float, ndmin=2)
        if tau.ndim != 2 or tau.shape[0] != tau.shape[1]:
            raise ValidationError("a transition matrix must be square")
        _check_stochastic_rows(tau, "transition matrix")
        tau.setflags(write=False)
        object.__setattr__(self, "matrix", tau)

    @property
    def is_identity(self):
        return np.array_equal(self.matrix, np.eye(self.matrix.shape[0]))

    def __eq__(self, other):
        if not isinstance(other, MarkovTransition):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix)

    def __repr__(self):
        return f"MarkovTransition({self.matrix.tolist()})"


def as_info(S):
    return S if isinstance(S, InfoStructure) else InfoStructure(S)


def as_transition(tau):
    return tau if isinstance(tau, MarkovTransition) else MarkovTransition(tau)


def signal_marginal(mu, S):
    """Probability of each signal under belief `mu`."""
    mu = as_belief(mu)
    S = as_info(S)
    return mu @ S.likelihoods


def bayes_update(mu, S, s):
    """Posterior after observing signal index `s`.

    Raises ZeroProbabilitySignal if `s` has (numerically) zero probability.
    """
    mu = as_belief(mu)
    S = as_info(S)
    joint = mu * S.likelihoods[:, s]
    total = joint.sum()
    if total <= ZERO_SIGNAL_TOL:
        raise ZeroProbabilitySignal(f"signal {s} has probability {total:g} under {mu.tolist()}")
    post = joint / total
    # renormalise to absorb rounding drift
    return post / post.sum()


def markov_push(mu, tau):
    """Belief about next period's state: the row-vector product ``mu @ tau``."""
    mu = as_belief(mu)
    tau = as_transition(tau)
    out = mu @ tau.matrix
    return out / out.sum()


def markov_fixed_point(tau, tol=1e-12, max_iter=100_000):
    """Stationary belief of a transition whose entries are all strictly below 1.

    Solved directly as a linear system, then checked against ``tol``.
    """
    tau = as_transition(tau)
    P = tau.matrix
    if np.any(P >= 1.0):
        raise NotContractive("every transition entry must be strictly below 1")
    m = P.shape[0]
    A = np.vstack([P.T - np.eye(m), np.ones(m)])
    b = np.zeros(m + 1)
    b[-1] = 1.0
    mu, *_ = np.linalg.lstsq(A, b, rcond=None)
    mu = np.clip(mu, 0.0, None)
    mu /= mu.sum()
    # polish by iteration in case the linear solve is ill-conditioned
    for _ in range(max_iter):
        if np.max(np.abs(mu @ P - mu)) <= tol:
            return mu
        mu = mu @ P
        mu /= mu.sum()
    raise NotContractive(f"belief iteration did not settle within {max_iter} steps")


class Relation(str, Enum):
    S_DOMINATES_T = "S_dominates_T"
    T_DOMINATES_S = "T_dominates_S"
    EQUIVALENT = "equivalent"
    INCOMPARABLE = "incomparable"


@dataclass
class BlackwellVerdict:
    relation: Relation
    witness: Optional[np.ndarray] = None
    residual: float = field(default=np.nan)
    reverse_witness: Optional[np.ndarray] = None


def _garbling_witness(S, T):
    """Find a row-stochastic M >= 0 with S @ M = T, or None if infeasible."""
    m, kS = S.shape
    kT = T.shape[1]
    n_vars = kS * kT  # M flattened row-major: index i*kT + j
    rows = []
    rhs = []
    for theta in range(m):
        for j in range(kT):
            row = np.zeros(n_vars)
            row[j::kT] = S[theta]
            rows.append(row)
            rhs.append(T[theta, j])
    for i in range(kS):
        row = np.zeros(n_vars)
        row[i * kT:(i + 1) * kT] = 1.0
        rows.append(row)
        rhs.append(1.0)
    res = solve_standard_form(np.zeros(n_vars), np.array(rows), np.array(rhs))
    if res.status != "optimal":
        return None, np.inf
    M = np.clip(res.x.reshape(kS, kT), 0.0, None)
    M /= M.sum(axis=1, keepdims=True)
    return M, float(np.max(np.abs(S @ M - T)))


def blackwell_compare(S, T, tol=FEASIBILITY_TOL):
    """Decide whether S garbles into T, T into S, both, or neither."""
    S = as_info(S)
    T = as_info(T)
    if S.state_count != T.state_count:
        raise ValidationError("information structures must share the same states")
    A, B = S.likelihoods, T.likelihoods
    if A.shape == B.shape and np.max(np.abs(A - B)) <= tol:
        eye = np.eye(A.shape[1])
        return BlackwellVerdict(Relation.EQUIVALENT, eye, float(np.max(np.abs(A - B))), eye)

    forward, res_f = _garbling_witness(A, B)
    backward, res_b = _garbling_witness(B, A)
    s_over_t = forward is not None and res_f <= tol
    t_over_s = backward is not None and res_b <= tol
    if s_over_t and t_over_s:
        return BlackwellVerdict(Relation.EQUIVALENT, forward, max(res_f, res_b), backward)
    if s_over_t:
        return BlackwellVerdict(Relation.S_DOMINATES_T, forward, res_f)
    if t_over_s:
        return BlackwellVerdict(Relation.T_DOMINATES_S, None, res_b, backward)
    return BlackwellVerdict(Relation.INCOMPARABLE, None, min(res_f, res_b))


def garble(S, M):
    """Post-process the signals of S through the stochastic matrix M."""
    S = as_info(S)
    M = np.array(M, dtype=float, ndmin=2)
    if M.shape[0] != S.signal_count:
        raise InvalidGarbling(f"garbling needs {S.signal_count} rows, got {M.shape[0]}")
    _check_stochastic_rows(M, "garbling matrix", error=InvalidGarbling)
    out = S.likelihoods @ M
    return InfoStructure(out / out.sum(axis=1, keepdims=True))
