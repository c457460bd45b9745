"""The stopping problem: states, payoffs, discounting, horizon, prior and signals."""

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .belief import InfoStructure, MarkovTransition, as_belief, as_info, as_transition
from .errors import ValidationError

# ties at V == pi go to the stop region
TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StoppingProblem:
    """A Bayesian stopping problem.

    `payoffs[a, theta]` is the utility of stopping with action `a` in state
    `theta`. With `include_outside_option` an extra action worth 0 in every
    state is appended (it always gets the last action index). A `horizon` of
    None means infinite.
    """

    payoffs: np.ndarray
    discount: float
    horizon: Optional[int]
    prior: np.ndarray
    info: InfoStructure
    include_outside_option: bool = False
    transition: Optional[MarkovTransition] = None
    state_labels: Optional[Sequence[str]] = None
    action_labels: Optional[Sequence[str]] = None

    def __post_init__(self):
        u = np.array(self.payoffs, dtype=float, ndmin=2)
        if u.ndim != 2 or u.shape[0] < 1:
            raise ValidationError("payoffs must be an action-by-state matrix with at least one action")
        if not np.all(np.isfinite(u)):
            raise ValidationError("payoffs must be finite")
        m = u.shape[1]
        if m < 2:
            raise ValidationError("a stopping problem needs at least two states")
        u.setflags(write=False)
        object.__setattr__(self, "payoffs", u)

        if not 0.0 < self.discount <= 1.0:
            raise ValidationError(f"discount must lie in (0, 1], got {self.discount}")
        if self.horizon is None:
            if self.discount >= 1.0:
                raise ValidationError("an infinite horizon requires discount < 1")
        elif int(self.horizon) != self.horizon or self.horizon < 0:
            raise ValidationError(f"horizon must be a non-negative integer, got {self.horizon}")
        else:
            object.__setattr__(self, "horizon", int(self.horizon))

        prior = as_belief(self.prior)
        if prior.size != m:
            raise ValidationError(f"prior has {prior.size} entries for {m} states")
        prior.setflags(write=False)
        object.__setattr__(self, "prior", prior)

        info = as_info(self.info)
        if info.state_count != m:
            raise ValidationError(f"information structure has {info.state_count} rows for {m} states")
        object.__setattr__(self, "info", info)

        if self.transition is not None:
            tau = as_transition(self.transition)
            if tau.matrix.shape[0] != m:
                raise ValidationError("transition matrix size does not match the state count")
            object.__setattr__(self, "transition", tau)

    @property
    def state_count(self):
        return self.payoffs.shape[1]

    @property
    def signal_count(self):
        return self.info.signal_count

    @property
    def is_infinite(self):
        return self.horizon is None

    @property
    def stop_alphas(self):
        """Payoff rows of every available stopping action, outside option last."""
        if self.include_outside_option:
            return np.vstack([self.payoffs, np.zeros(self.state_count)])
        return self.payoffs

    @property
    def outside_action(self):
        return self.payoffs.shape[0] if self.include_outside_option else None

    @property
    def transition_matrix(self):
        if self.transition is None:
            return np.eye(self.state_count)
        return self.transition.matrix

    @property
    def has_dynamics(self):
        return self.transition is not None and not self.transition.is_identity

    @property
    def payoff_bound(self):
        return float(np.max(np.abs(self.payoffs)))

    def replace(self, **changes):
        return replace(self, **changes)

    def __eq__(self, other):
        if not isinstance(other, StoppingProblem):
            return NotImplemented
        return (
            np.array_equal(self.payoffs, other.payoffs)
            and self.discount == other.discount
            and self.horizon == other.horizon
            and np.array_equal(self.prior, other.prior)
            and self.info == other.info
            and self.include_outside_option == other.include_outside_option
            and self.transition == other.transition
        )


def stopping_payoff(mu, problem):
    """Best immediate payoff at belief `mu` and the action attaining it.

    Ties go to the lowest action index.
    """
    mu = np.asarray(mu, dtype=float)
    values = problem.stop_alphas @ mu
    best = int(np.argmax(values))
    return float(values[best]), best


def stopping_payoffs(beliefs, problem):
    """Vectorised `stopping_payoff` over rows of `beliefs`."""
    values = np.asarray(beliefs, dtype=float) @ problem.stop_alphas.T
    best = np.argmax(values, axis=-1)
    return np.take_along_axis(values, best[..., None], axis=-1)[..., 0], best
