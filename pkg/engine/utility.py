# engine/utility.py
"""Evaluable utilities k : Y^ω -> R^p for iterated games.

Every functional is kept in positive-affine normal form

    k(w) = offset + scale * (u(w0) + d1 u(w1) + d2 u(w2) + ...)

where the weights d_i depend on the kind. Shifting by a move folds that
move's payoff into the offset and rescales, so shift(k, y) is exactly
z -> k(y :: z). Prefix evaluation is defined as repeated shifting, which
makes shift soundness hold bit for bit.
"""
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Hashable, Mapping, Optional, Sequence, Tuple

from .errors import EmptyPrefix, HorizonExhausted, UnknownMove

logger = logging.getLogger(__name__)

Vector = Tuple[float, ...]


class UtilityKind(Enum):
    DISCOUNTED = "discounted"
    FINITE_HORIZON = "finite_horizon"
    MEAN_PAYOFF_APPROX = "mean_payoff_approx"


@dataclass(frozen=True)
class PrefixValue:
    value: Vector
    tail_bound: float
    approximate: bool = False


def _add(a: Vector, b: Vector) -> Vector:
    return tuple(x + y for x, y in zip(a, b))


def _scaled(c: float, a: Vector) -> Vector:
    return tuple(c * x for x in a)


@dataclass(frozen=True)
class UtilityFunctional:
    kind: UtilityKind
    stage_payoff: Tuple[Tuple[Hashable, Vector], ...]
    discount: float = 0.0
    horizon: Optional[int] = None
    affine_offset: Optional[Vector] = None
    affine_scale: float = 1.0

    def __post_init__(self):
        if not self.stage_payoff:
            raise ValueError("stage_payoff must cover at least one move")
        dims = {len(v) for _, v in self.stage_payoff}
        if len(dims) != 1:
            raise ValueError("stage payoffs must share one dimension")
        if self.affine_offset is None:
            object.__setattr__(self, "affine_offset", (0.0,) * dims.pop())
        if not self.affine_scale > 0:
            raise ValueError(f"affine_scale must be positive, got {self.affine_scale}")
        if self.kind is UtilityKind.DISCOUNTED and not 0 <= self.discount < 1:
            raise ValueError(f"discount must lie in [0, 1), got {self.discount}")
        if self.kind is not UtilityKind.DISCOUNTED and (self.horizon is None or self.horizon < 0):
            raise ValueError(f"{self.kind.value} needs a horizon, got {self.horizon}")

    # constructors

    @classmethod
    def discounted(cls, stage_payoff: Mapping[Hashable, Sequence[float]], delta: float) -> "UtilityFunctional":
        return cls(UtilityKind.DISCOUNTED, _payoff_items(stage_payoff), discount=delta)

    @classmethod
    def finite_horizon(cls, stage_payoff: Mapping[Hashable, Sequence[float]], horizon: int) -> "UtilityFunctional":
        if horizon < 1:
            raise ValueError(f"horizon must be at least 1, got {horizon}")
        return cls(UtilityKind.FINITE_HORIZON, _payoff_items(stage_payoff), horizon=horizon)

    @classmethod
    def mean_payoff_approx(cls, stage_payoff: Mapping[Hashable, Sequence[float]], window: int) -> "UtilityFunctional":
        if window < 1:
            raise ValueError(f"window must be at least 1, got {window}")
        return cls(
            UtilityKind.MEAN_PAYOFF_APPROX, _payoff_items(stage_payoff), horizon=window, affine_scale=1.0 / window
        )

    @classmethod
    def from_bimatrix(cls, bimatrix, delta: float) -> "UtilityFunctional":
        """Discounted utility over move profiles, one coordinate per player."""
        return cls.discounted(bimatrix.stage_payoff(), delta)

    # queries

    @cached_property
    def _payoffs(self):
        return dict(self.stage_payoff)

    def payoff(self, y: Hashable) -> Vector:
        if y in self._payoffs:
            return self._payoffs[y]
        raise UnknownMove(f"No stage payoff for move {y!r}")

    @property
    def dimension(self) -> int:
        return len(self.affine_offset)

    @property
    def max_stage_payoff(self) -> float:
        return max(abs(c) for _, v in self.stage_payoff for c in v)

    @property
    def approximate(self) -> bool:
        return self.kind is UtilityKind.MEAN_PAYOFF_APPROX

    @property
    def exhausted(self) -> bool:
        return self.kind is not UtilityKind.DISCOUNTED and self.horizon == 0

    def remaining_bound(self) -> float:
        """Largest change the unconsumed part of any stream can still make."""
        if self.kind is UtilityKind.DISCOUNTED:
            return self.affine_scale * self.max_stage_payoff / (1 - self.discount)
        return self.affine_scale * self.horizon * self.max_stage_payoff

    def without_offset(self) -> "UtilityFunctional":
        return replace(self, affine_offset=(0.0,) * self.dimension)


def _payoff_items(stage_payoff: Mapping[Hashable, Sequence[float]]) -> Tuple[Tuple[Hashable, Vector], ...]:
    return tuple((y, tuple(float(c) for c in v)) for y, v in stage_payoff.items())


def _step(k: UtilityFunctional, offset: Vector, scale: float, horizon, zeroed: bool, y: Hashable):
    # one shift on unpacked fields; shift and evaluate_prefix both go through here
    u = (0.0,) * k.dimension if zeroed else k.payoff(y)
    offset = _add(offset, _scaled(scale, u))
    if k.kind is UtilityKind.DISCOUNTED:
        if k.discount == 0:
            return offset, scale, horizon, True
        return offset, scale * k.discount, horizon, zeroed
    return offset, scale, horizon - 1, zeroed


def shift(k: UtilityFunctional, y: Hashable) -> UtilityFunctional:
    """Return z -> k(y :: z) in normal form."""
    if k.exhausted:
        raise HorizonExhausted(f"{k.kind.value} utility has no stages left to shift by {y!r}")
    offset, scale, horizon, zeroed = _step(k, k.affine_offset, k.affine_scale, k.horizon, False, y)
    if zeroed:
        # discount 0: later stages carry no weight, so the scale stays and the payoffs go
        zero = tuple((move, (0.0,) * k.dimension) for move, _ in k.stage_payoff)
        return replace(k, affine_offset=offset, stage_payoff=zero)
    return replace(k, affine_offset=offset, affine_scale=scale, horizon=horizon)


def advance(k: UtilityFunctional, y: Hashable) -> UtilityFunctional:
    """Shift, treating an exhausted horizon as a constant functional."""
    return k if k.exhausted else shift(k, y)


def evaluate_prefix(k: UtilityFunctional, prefix: Sequence[Hashable]) -> PrefixValue:
    """Value of k on any stream extending `prefix`, up to `tail_bound`."""
    if k.kind is UtilityKind.MEAN_PAYOFF_APPROX and len(prefix) == 0:
        raise EmptyPrefix("mean_payoff_approx needs at least one move")
    offset, scale, horizon, zeroed = k.affine_offset, k.affine_scale, k.horizon, False
    for y in prefix:
        if k.kind is not UtilityKind.DISCOUNTED and horizon == 0:
            break
        offset, scale, horizon, zeroed = _step(k, offset, scale, horizon, zeroed, y)
    largest = 0.0 if zeroed else k.max_stage_payoff
    if k.kind is UtilityKind.DISCOUNTED:
        tail = scale * largest / (1 - k.discount)
    else:
        tail = scale * horizon * largest
    return PrefixValue(offset, tail, k.approximate)


def horizon_for(k: UtilityFunctional, epsilon: float, cap: int) -> int:
    """Smallest prefix length whose tail bound is at most epsilon, capped."""
    if k.kind is not UtilityKind.DISCOUNTED:
        return min(k.horizon, cap)
    bound = k.remaining_bound()
    if bound <= epsilon:
        return 0
    if k.discount == 0:
        return 1
    needed = math.ceil(math.log(epsilon / bound) / math.log(k.discount))
    return min(max(needed, 1), cap)
