# engine/carriers.py
"""Value sets that open games are typed over.

Finite sets carry symbolic labels in a fixed order; that order drives every
enumeration in the engine. Utilities for iterated games are real numbers,
which are not finite, so they get their own carriers with a small
deterministic probe set used wherever the engine has to enumerate them.
"""
import itertools
import numbers
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Hashable, Iterable, Iterator, Tuple

from .errors import InvalidFinSet


@dataclass(frozen=True)
class FinSet:
    elements: Tuple[Hashable, ...]

    def __init__(self, elements: Iterable[Hashable] = ()):
        elements = tuple(elements)
        if len(set(elements)) != len(elements):
            raise InvalidFinSet(f"Duplicate labels in {elements!r}")
        object.__setattr__(self, "elements", elements)

    is_finite = True

    def __iter__(self) -> Iterator[Hashable]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, label: Any) -> bool:
        return label in self._positions

    def __repr__(self) -> str:
        return f"FinSet({list(self.elements)!r})"

    @cached_property
    def _positions(self):
        return {label: i for i, label in enumerate(self.elements)}

    def index(self, label: Hashable) -> int:
        return self._positions[label]

    def samples(self) -> Tuple[Hashable, ...]:
        return self.elements

    @property
    def dimension(self) -> int:
        return 1


@dataclass(frozen=True)
class Reals:
    """The real line, used as the utility set of numeric games."""

    is_finite = False

    def __contains__(self, value: Any) -> bool:
        return isinstance(value, numbers.Real) and not isinstance(value, bool)

    def samples(self) -> Tuple[float, ...]:
        return (-1.0, 0.0, 2.5)

    @property
    def dimension(self) -> int:
        return 1


@dataclass(frozen=True)
class ProductCarrier:
    """Cartesian product of two carriers when at least one side is infinite."""

    left: Any
    right: Any

    is_finite = False

    def __contains__(self, value: Any) -> bool:
        return (
            isinstance(value, tuple)
            and len(value) == 2
            and value[0] in self.left
            and value[1] in self.right
        )

    def samples(self) -> Tuple[Tuple[Any, Any], ...]:
        return tuple(itertools.product(self.left.samples(), self.right.samples()))

    @property
    def dimension(self) -> int:
        return self.left.dimension + self.right.dimension


UNIT_ELEMENT = "*"
UNIT = FinSet([UNIT_ELEMENT])
REALS = Reals()


def product(left, right):
    """Cartesian product of two carriers, finite whenever both sides are."""
    if left.is_finite and right.is_finite:
        return FinSet(itertools.product(left, right))
    return ProductCarrier(left, right)


def pack(carrier, vector: Tuple[float, ...]):
    """Shape a flat payoff vector like the (possibly nested) numeric carrier."""
    if isinstance(carrier, ProductCarrier):
        split = carrier.left.dimension
        return (pack(carrier.left, vector[:split]), pack(carrier.right, vector[split:]))
    return vector[0]
