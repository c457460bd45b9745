"""JSON problem configurations: parsing, validation and serialization."""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt, field_validator
from pydantic import ValidationError as PydanticValidationError

from .errors import ValidationError
from .fees import FeeScheme, Timing, Zero, fee_from_dict
from .problem import StoppingProblem
from .tree import DEFAULT_TREE_BUDGET

SUM_TOL = 1e-9


class ConfigError(ValidationError):
    """A configuration problem, addressed by field path (or JSON line/column)."""

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ActionsConfig(_Strict):
    labels: List[str] = Field(min_length=1)
    payoffs: List[List[float]] = Field(min_length=1)


class FeeConfig(_Strict):
    variant: Literal["zero", "upfront", "flat", "schedule", "delayed_lump", "explicit_tree"]
    parameters: Dict[str, Any] = Field(default_factory=dict)
    timing: Timing = Timing.NEXT_PERIOD


class QuotaConfig(_Strict):
    K: PositiveInt
    L: NonNegativeInt


class SolverConfig(_Strict):
    grid_points: int = Field(201, ge=2)
    tol: float = Field(1e-8, gt=0)
    tree_budget: PositiveInt = DEFAULT_TREE_BUDGET
    seed: NonNegativeInt = 0
    n_max: NonNegativeInt = 200
    max_signals: Optional[NonNegativeInt] = None


def _check_distribution(values, what):
    if any(v < 0 for v in values):
        raise ValueError(f"{what} entries must be non-negative")
    if abs(sum(values) - 1.0) > SUM_TOL:
        raise ValueError(f"{what} must sum to 1 (got {sum(values):.10g})")
    return values


class ProblemConfig(_Strict):
    states: List[str] = Field(min_length=2)
    actions: ActionsConfig
    include_outside_option: bool = False
    discount: float = Field(gt=0, le=1)
    horizon: Union[NonNegativeInt, Literal["inf"]]
    prior: List[float]
    info_structure: List[List[float]]
    transition: Optional[List[List[float]]] = None
    fee: Optional[FeeConfig] = None
    quota: Optional[QuotaConfig] = None
    solver: SolverConfig = Field(default_factory=SolverConfig)

    @field_validator("prior")
    @classmethod
    def _prior_is_distribution(cls, v):
        return _check_distribution(v, "prior")

    @field_validator("info_structure", "transition")
    @classmethod
    def _rows_are_distributions(cls, v):
        if v is not None:
            for i, row in enumerate(v):
                _check_distribution(row, f"row {i}")
        return v

    def _check_shapes(self):
        m = len(self.states)
        checks = [
            ("prior", len(self.prior) == m, f"expected {m} entries, one per state"),
            ("info_structure", len(self.info_structure) == m, f"expected {m} rows, one per state"),
            ("actions.payoffs", len(self.actions.payoffs) == len(self.actions.labels),
             "expected one payoff row per action label"),
        ]
        for i, row in enumerate(self.actions.payoffs):
            checks.append((f"actions.payoffs.{i}", len(row) == m, f"expected {m} entries, one per state"))
        widths = {len(row) for row in self.info_structure}
        checks.append(("info_structure", len(widths) == 1, "rows must have equal length"))
        if self.transition is not None:
            ok = len(self.transition) == m and all(len(row) == m for row in self.transition)
            checks.append(("transition", ok, f"expected a {m}x{m} matrix"))
        if self.horizon == "inf":
            checks.append(("discount", self.discount < 1, "an infinite horizon needs discount < 1"))
            checks.append(("fee", self.fee is None or self.fee.variant == "zero",
                           "fees need a finite horizon"))
            checks.append(("quota", self.quota is None, "quotas need a finite horizon"))
        for path, ok, message in checks:
            if not ok:
                raise ConfigError(path, message)

    @property
    def horizon_value(self):
        return None if self.horizon == "inf" else int(self.horizon)

    def to_problem(self):
        self._check_shapes()
        try:
            return StoppingProblem(
                payoffs=self.actions.payoffs,
                discount=self.discount,
                horizon=self.horizon_value,
                prior=self.prior,
                info=self.info_structure,
                include_outside_option=self.include_outside_option,
                transition=self.transition,
                state_labels=tuple(self.states),
                action_labels=tuple(self.actions.labels),
            )
        except ValidationError as exc:
            raise ConfigError("", str(exc)) from exc

    def to_fee(self) -> FeeScheme:
        if self.fee is None:
            return Zero()
        spec = self.fee.model_dump(mode="json")
        try:
            return fee_from_dict(spec)
        except KeyError as exc:
            raise ConfigError("fee.parameters", f"missing parameter {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError("fee.parameters", str(exc)) from exc

    def dumps(self):
        return self.model_dump_json(indent=2, exclude_none=True) + "\n"


def _format_pydantic(exc):
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"])
        message = err["msg"].removeprefix("Value error, ")
        lines.append(f"{path}: {message}" if path else message)
    first = exc.errors()[0]
    return ".".join(str(p) for p in first["loc"]), "; ".join(lines)


def parse_config(text):
    """Parse and validate a JSON document; errors carry a field path or a line/column."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}", exc.msg) from exc
    if not isinstance(data, dict):
        raise ConfigError("", "the configuration must be a JSON object")
    try:
        config = ProblemConfig.model_validate(data)
    except PydanticValidationError as exc:
        path, message = _format_pydantic(exc)
        error = ConfigError("", message)
        error.path = path
        raise error from exc
    config._check_shapes()
    return config


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from exc
    return parse_config(text)


def config_from_problem(problem, fee=None, quota=None, solver=None):
    """Build a configuration that re-parses to an equal problem (and fee)."""
    m = problem.state_count
    states = list(problem.state_labels or [f"theta{i + 1}" for i in range(m)])
    labels = list(problem.action_labels or [f"a{i + 1}" for i in range(problem.payoffs.shape[0])])
    data = {
        "states": states,
        "actions": {"labels": labels, "payoffs": problem.payoffs.tolist()},
        "include_outside_option": problem.include_outside_option,
        "discount": problem.discount,
        "horizon": "inf" if problem.horizon is None else problem.horizon,
        "prior": problem.prior.tolist(),
        "info_structure": problem.info.likelihoods.tolist(),
    }
    if problem.transition is not None:
        data["transition"] = problem.transition.matrix.tolist()
    if fee is not None:
        data["fee"] = fee.to_dict()
    if quota is not None:
        data["quota"] = {"K": quota[0], "L": quota[1]}
    if solver is not None:
        data["solver"] = solver
    return ProblemConfig.model_validate(data)
