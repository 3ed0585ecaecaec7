# engine/conditioning.py
"""The conditioning modality A -> H.

A strategy of A -> H picks one strategy of H for every a in A, and it is an
equilibrium exactly when every component is. Conditioning a game on the moves
of an earlier round is what makes later rounds react to what was played.
"""
import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Hashable, Tuple

from config import settings

from .carriers import FinSet, product
from .errors import EmptyIndexSet, EnumerationTooLarge
from .morphisms import GameMorphism, require_valid
from .open_game import Continuation, OpenGame

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConditionedStrategy:
    """A total table f : A -> Σ_H, ordered like A."""

    entries: Tuple[Tuple[Hashable, Hashable], ...]

    @cached_property
    def _lookup(self):
        return dict(self.entries)

    def __call__(self, a: Hashable) -> Hashable:
        return self._lookup[a]

    def mapped(self, fn: Callable[[Hashable], Hashable]) -> "ConditionedStrategy":
        """Post-compose every component with `fn`."""
        return ConditionedStrategy(tuple((a, fn(s)) for a, s in self.entries))

    def __repr__(self) -> str:
        return "{" + ", ".join(f"{a!r}: {s!r}" for a, s in self.entries) + "}"


def strategy_tables(index: FinSet, strategies: FinSet, guard: int = None) -> FinSet:
    """Every table index -> strategies, in lexicographic order of the index set."""
    guard = settings.STRATEGY_GUARD if guard is None else guard
    count = len(strategies) ** len(index)
    if count > guard:
        raise EnumerationTooLarge(
            f"{len(strategies)}^{len(index)} = {count} strategy tables exceed the guard {guard}"
        )
    logger.debug("Materializing %d strategy tables", count)
    return FinSet(
        ConditionedStrategy(tuple(zip(index, choice)))
        for choice in itertools.product(strategies, repeat=len(index))
    )


def condition(index: FinSet, game: OpenGame, guard: int = None) -> OpenGame:
    """Build A -> H : (A x X, S) -> (A x Y, R)."""
    if len(index) == 0:
        raise EmptyIndexSet(f"Cannot condition {game.name} on an empty index set")

    def play(f, state):
        a, x = state
        return (a, game.play(f(a), x))

    def coutility(f, state, r):
        a, x = state
        return game.coutility(f(a), x, r)

    def equilibrium(state, k, f):
        _, x = state
        for a in index:
            k_a = Continuation.from_function(game.moves, lambda y, a=a: k((a, y)))
            if not game.equilibrium(x, k_a, f(a)):
                return False
        return True

    return OpenGame(
        states=product(index, game.states),
        coutilities=game.coutilities,
        moves=product(index, game.moves),
        utilities=game.utilities,
        strategies=strategy_tables(index, game.strategies, guard),
        play_fn=play,
        coutility_fn=coutility,
        equilibrium_fn=equilibrium,
        name=f"({len(index)} -> {game.name})",
        affine_invariant=game.affine_invariant,
    )


def condition_on_morphism(index: FinSet, alpha, source: OpenGame, target: OpenGame, **check_options):
    """Lift a valid morphism source -> target to (A -> source) -> (A -> target)."""
    require_valid(alpha, source, target, **check_options)
    conditioned_source = condition(index, source)
    alpha_y = {(a, y): (a, alpha.alpha_y[y]) for a in index for y in source.moves}
    alpha_sigma = {
        f: f.mapped(lambda s: alpha.alpha_sigma[s]) for f in conditioned_source.strategies
    }
    return GameMorphism(alpha_y, alpha_sigma)
