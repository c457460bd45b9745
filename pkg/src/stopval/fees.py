"""History-dependent fee schemes.

A history is a tuple of signal indices, ``()`` being the null history at
period 0. Under the multi-signal model each element is itself a tuple (one
batch of signals). A scheme answers two questions: the charge at the null
history, paid on accepting, and the charge ``c(h_n)`` for ``n >= 1``, paid
when the decision-maker acquired at ``h_{n-1}``.

With ``timing="next_period"`` the charge for ``h_{n+1}`` is paid in period
``n+1``; with ``timing="immediate"`` it is paid in period ``n``, alongside the
acquisition decision.
"""

from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Dict, Mapping, Tuple

import numpy as np

from .errors import ValidationError


class Timing(str, Enum):
    NEXT_PERIOD = "next_period"
    IMMEDIATE = "immediate"


def _check_fee(value, what):
    value = float(value)
    if not np.isfinite(value) or value < 0.0:
        raise ValidationError(f"{what} must be a finite non-negative number, got {value}")
    return value


@dataclass(frozen=True)
class FeeScheme:
    timing: Timing = field(default=Timing.NEXT_PERIOD, kw_only=True)

    def __post_init__(self):
        object.__setattr__(self, "timing", Timing(self.timing))

    def root_charge(self, delta):
        """Payment made at period 0 upon accepting the scheme."""
        return 0.0

    def charge(self, period, history):
        """Fee ``c(h)`` for a non-null history `h` reached at `period`."""
        return 0.0

    def level_charges(self, period, signal_count):
        """Fees for all ``signal_count**period`` single-signal histories of a
        period, indexed in base ``signal_count`` with the first signal most
        significant."""
        return np.full(signal_count ** period, self.charge(period, None))

    def payment_discount(self, delta):
        """Discount applied to ``c(h_{n+1})`` when valuing it from period n."""
        return delta if self.timing is Timing.NEXT_PERIOD else 1.0

    def scaled(self, factor):
        """Copy with every non-null-history fee multiplied by `factor`."""
        return self

    @property
    def history_independent(self):
        """True when period-n fees do not depend on which signals were seen."""
        return True

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Zero(FeeScheme):
    def to_dict(self):
        return {"variant": "zero", "parameters": {}, "timing": self.timing.value}


@dataclass(frozen=True)
class Upfront(FeeScheme):
    phi: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "phi", _check_fee(self.phi, "upfront fee"))

    def root_charge(self, delta):
        return self.phi

    def to_dict(self):
        return {"variant": "upfront", "parameters": {"phi": self.phi}, "timing": self.timing.value}


@dataclass(frozen=True)
class Flat(FeeScheme):
    """The same fee after every history of length at least one."""

    c: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "c", _check_fee(self.c, "flat fee"))

    def charge(self, period, history):
        return self.c

    def scaled(self, factor):
        return Flat(self.c * factor, timing=self.timing)

    def to_dict(self):
        return {"variant": "flat", "parameters": {"c": self.c}, "timing": self.timing.value}


@dataclass(frozen=True)
class Schedule(FeeScheme):
    """``fees[n]`` is charged for every history of length n; ``fees[0]`` is upfront.

    Periods past the end of the vector are free.
    """

    fees: Tuple[float, ...] = ()

    def __post_init__(self):
        super().__post_init__()
        fees = tuple(_check_fee(f, f"scheduled fee {n}") for n, f in enumerate(self.fees))
        object.__setattr__(self, "fees", fees)

    def _at(self, period):
        return self.fees[period] if period < len(self.fees) else 0.0

    def root_charge(self, delta):
        return self._at(0)

    def charge(self, period, history):
        return self._at(period)

    def scaled(self, factor):
        if not self.fees:
            return self
        return Schedule((self.fees[0],) + tuple(f * factor for f in self.fees[1:]), timing=self.timing)

    def to_dict(self):
        return {"variant": "schedule", "parameters": {"fees": list(self.fees)}, "timing": self.timing.value}


@dataclass(frozen=True)
class DelayedLump(FeeScheme):
    """A single committed payment `phi` due `K` periods after accepting.

    Its present value at acceptance is ``delta**K * phi``; payment timing
    conventions do not apply to it.
    """

    K: int = 1
    phi: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if int(self.K) != self.K or self.K < 0:
            raise ValidationError(f"payment delay K must be a non-negative integer, got {self.K}")
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "phi", _check_fee(self.phi, "lump payment"))

    def root_charge(self, delta):
        return delta ** self.K * self.phi

    def to_dict(self):
        return {
            "variant": "delayed_lump",
            "parameters": {"K": self.K, "phi": self.phi},
            "timing": self.timing.value,
        }


@dataclass(frozen=True, eq=False)
class ExplicitTree(FeeScheme):
    """Arbitrary fees keyed by history; unlisted histories are free."""

    fees: Mapping[tuple, float] = field(default_factory=dict)

    def __post_init__(self):
        super().__post_init__()
        clean: Dict[tuple, float] = {}
        for history, fee in dict(self.fees).items():
            clean[tuple(history)] = _check_fee(fee, f"fee at history {history}")
        object.__setattr__(self, "fees", clean)

    @classmethod
    def from_levels(cls, root, levels, signal_count, timing=Timing.NEXT_PERIOD):
        """Build from per-period fee arrays in the base-k layout of `level_charges`.

        ``levels[n-1]`` holds the fees for histories of length n.
        """
        scheme = cls({}, timing=timing)
        levels = [np.asarray(level, dtype=float) for level in levels]
        for n, level in enumerate(levels, start=1):
            if level.shape != (signal_count ** n,):
                raise ValidationError(f"level {n} needs {signal_count ** n} fees, got {level.shape}")
            if np.any(level < 0) or not np.all(np.isfinite(level)):
                raise ValidationError("fees must be finite and non-negative")
        fees = {(): _check_fee(root, "root fee")} if root else {}
        object.__setattr__(scheme, "fees", fees)
        object.__setattr__(scheme, "_levels", (signal_count, levels))
        return scheme

    def _materialise(self):
        cached = self.__dict__.get("_levels")
        if cached is not None:
            signal_count, levels = cached
            for n, level in enumerate(levels, start=1):
                for index, history in enumerate(product(range(signal_count), repeat=n)):
                    if level[index]:
                        self.fees[history] = float(level[index])
            object.__setattr__(self, "_levels", None)

    def root_charge(self, delta):
        return self.fees.get((), 0.0)

    def charge(self, period, history):
        self._materialise()
        return self.fees.get(tuple(history), 0.0)

    def level_charges(self, period, signal_count):
        cached = self.__dict__.get("_levels")
        if cached is not None and cached[0] == signal_count:
            levels = cached[1]
            if period <= len(levels):
                return levels[period - 1]
            return np.zeros(signal_count ** period)
        out = np.zeros(signal_count ** period)
        for history, fee in self.fees.items():
            if len(history) == period and all(isinstance(s, (int, np.integer)) for s in history):
                index = 0
                for s in history:
                    index = index * signal_count + int(s)
                out[index] = fee
        return out

    def scaled(self, factor):
        self._materialise()
        return ExplicitTree(
            {h: (f if h == () else f * factor) for h, f in self.fees.items()}, timing=self.timing
        )

    @property
    def history_independent(self):
        return False

    def __eq__(self, other):
        if not isinstance(other, ExplicitTree):
            return NotImplemented
        self._materialise()
        other._materialise()
        return self.timing == other.timing and self.fees == other.fees

    def to_dict(self):
        self._materialise()
        entries = [{"history": list(h), "fee": f} for h, f in sorted(self.fees.items())]
        return {"variant": "explicit_tree", "parameters": {"fees": entries}, "timing": self.timing.value}


def timing_transform(fee, delta):
    """Equivalent scheme under the other payment-timing convention.

    Paying ``c`` at the acquisition decision is worth the same as paying
    ``c / delta`` one period later, so converting an immediate scheme to the
    next-period convention divides by `delta` and the reverse multiplies by
    it. The null-history charge is unaffected.
    """
    if not 0.0 < delta <= 1.0:
        raise ValidationError(f"discount must lie in (0, 1], got {delta}")
    if fee.timing is Timing.IMMEDIATE:
        out = fee.scaled(1.0 / delta)
        target = Timing.NEXT_PERIOD
    else:
        out = fee.scaled(delta)
        target = Timing.IMMEDIATE
    if out is fee:
        out = _with_timing(fee, target)
    else:
        object.__setattr__(out, "timing", target)
    return out


def _with_timing(fee, timing):
    from dataclasses import replace

    if isinstance(fee, ExplicitTree):
        fee._materialise()
        return ExplicitTree(dict(fee.fees), timing=timing)
    return replace(fee, timing=timing)


def fee_from_dict(spec):
    """Inverse of ``FeeScheme.to_dict``."""
    variant = spec.get("variant")
    params = dict(spec.get("parameters") or {})
    timing = Timing(spec.get("timing", Timing.NEXT_PERIOD.value))
    if variant == "zero":
        return Zero(timing=timing)
    if variant == "upfront":
        return Upfront(params["phi"], timing=timing)
    if variant == "flat":
        return Flat(params["c"], timing=timing)
    if variant == "schedule":
        return Schedule(tuple(params["fees"]), timing=timing)
    if variant == "delayed_lump":
        return DelayedLump(params["K"], params["phi"], timing=timing)
    if variant == "explicit_tree":
        fees = {}
        for entry in params.get("fees", []):
            history = tuple(tuple(b) if isinstance(b, list) else b for b in entry["history"])
            fees[history] = entry["fee"]
        return ExplicitTree(fees, timing=timing)
    raise ValidationError(f"unknown fee variant {variant!r}")


@dataclass(frozen=True)
class TreeFeeSampler:
    """Random ``ExplicitTree`` schemes for auditing the value of information.

    Each scheme first draws its own scale uniformly from ``(0, fee_scale)``
    and then draws every node fee, the null history included, uniformly from
    ``[0, scale]``. The timing convention is drawn at random when
    `mixed_timing` is set.
    """

    horizon: int
    signal_count: int
    fee_scale: float
    mixed_timing: bool = True

    def __call__(self, rng):
        scale = rng.uniform(0.0, self.fee_scale)
        root = rng.uniform(0.0, scale)
        levels = [rng.uniform(0.0, scale, self.signal_count ** n) for n in range(1, self.horizon + 1)]
        timing = Timing.NEXT_PERIOD
        if self.mixed_timing and rng.random() < 0.5:
            timing = Timing.IMMEDIATE
        return ExplicitTree.from_levels(root, levels, self.signal_count, timing=timing)
