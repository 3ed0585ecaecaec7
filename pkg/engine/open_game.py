# engine/open_game.py
"""Finite open games and their symmetric monoidal structure.

A game (X, S) -> (Y, R) is a strategy set with a play function, a coutility
function and an equilibrium predicate. Play and coutility are total on their
finite domains; the equilibrium predicate is kept as a decision procedure
because its domain X x (Y -> R) grows exponentially in |Y|.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Hashable, List, Mapping, Optional

from .carriers import UNIT, FinSet, product
from .errors import BoundaryMismatch

logger = logging.getLogger(__name__)

Strategy = Hashable


class Continuation:
    """A total finite table k : Y -> R."""

    __slots__ = ("moves", "_table")

    def __init__(self, moves: FinSet, table: Mapping[Hashable, Any]):
        missing = [y for y in moves if y not in table]
        if missing:
            raise ValueError(f"Continuation undefined on {missing!r}")
        self.moves = moves
        self._table = {y: table[y] for y in moves}

    @classmethod
    def from_function(cls, moves: FinSet, fn: Callable[[Hashable], Any]) -> "Continuation":
        return cls(moves, {y: fn(y) for y in moves})

    def __call__(self, y: Hashable) -> Any:
        return self._table[y]

    def items(self):
        return self._table.items()

    def values(self):
        return self._table.values()

    def __eq__(self, other) -> bool:
        return isinstance(other, Continuation) and self._table == other._table

    def __hash__(self) -> int:
        return hash(tuple(self._table.items()))

    def __repr__(self) -> str:
        return f"Continuation({self._table!r})"


@dataclass(frozen=True)
class OpenGame:
    states: FinSet
    coutilities: Any
    moves: FinSet
    utilities: Any
    strategies: FinSet
    play_fn: Callable[[Strategy, Hashable], Hashable] = field(compare=False)
    coutility_fn: Callable[[Strategy, Hashable, Any], Any] = field(compare=False)
    equilibrium_fn: Callable[[Hashable, Continuation, Strategy], bool] = field(compare=False)
    name: str = "game"
    # positive-affine invariance of E, set by library constructors
    affine_invariant: bool = False
    # rebuilds the same game with another best-response tolerance
    at_tolerance: Optional[Callable[[float], "OpenGame"]] = field(default=None, compare=False)

    @property
    def dom(self):
        return (self.states, self.coutilities)

    @property
    def cod(self):
        return (self.moves, self.utilities)

    def play(self, sigma: Strategy, x: Hashable) -> Hashable:
        return self.play_fn(sigma, x)

    def coutility(self, sigma: Strategy, x: Hashable, r: Any) -> Any:
        return self.coutility_fn(sigma, x, r)

    def equilibrium(self, x: Hashable, k: Continuation, sigma: Strategy) -> bool:
        return bool(self.equilibrium_fn(x, k, sigma))

    def __repr__(self) -> str:
        return (
            f"OpenGame({self.name}: ({len(self.states)} states) -> "
            f"({len(self.moves)} moves), {len(self.strategies)} strategies)"
        )


def equilibrium_set(game: OpenGame, x: Hashable, k: Continuation) -> List[Strategy]:
    """Materialize E x k by enumerating the strategy set in order."""
    return [sigma for sigma in game.strategies if game.equilibrium(x, k, sigma)]


def identity_game(states: FinSet, coutilities) -> OpenGame:
    return OpenGame(
        states=states,
        coutilities=coutilities,
        moves=states,
        utilities=coutilities,
        strategies=UNIT,
        play_fn=lambda sigma, x: x,
        coutility_fn=lambda sigma, x, s: s,
        equilibrium_fn=lambda x, k, sigma: True,
        name="id",
        affine_invariant=True,
    )


def unit_game() -> OpenGame:
    """The monoidal unit (1, 1) -> (1, 1)."""
    return identity_game(UNIT, UNIT)


def compose(g: OpenGame, h: OpenGame) -> OpenGame:
    """Sequential composite h after g, with strategies Σ_g x Σ_h."""
    if g.moves != h.states or g.utilities != h.coutilities:
        raise BoundaryMismatch(
            f"Cannot compose {g.name} -> {h.name}: codomain {g.cod!r} != domain {h.dom!r}"
        )

    def play(sigma, x):
        s1, s2 = sigma
        return h.play(s2, g.play(s1, x))

    def coutility(sigma, x, q):
        s1, s2 = sigma
        y = g.play(s1, x)
        return g.coutility(s1, x, h.coutility(s2, y, q))

    def equilibrium(x, k, sigma):
        s1, s2 = sigma
        k_inner = Continuation.from_function(
            g.moves, lambda y: h.coutility(s2, y, k(h.play(s2, y)))
        )
        if not g.equilibrium(x, k_inner, s1):
            return False
        # h must be optimal from every state g could hand it
        return all(h.equilibrium(g.play(other, x), k, s2) for other in g.strategies)

    return OpenGame(
        states=g.states,
        coutilities=g.coutilities,
        moves=h.moves,
        utilities=h.utilities,
        strategies=product(g.strategies, h.strategies),
        play_fn=play,
        coutility_fn=coutility,
        equilibrium_fn=equilibrium,
        name=f"({h.name} . {g.name})",
        affine_invariant=g.affine_invariant and h.affine_invariant,
    )


def tensor(g: OpenGame, h: OpenGame) -> OpenGame:
    """Parallel product with componentwise play and coutility."""

    def play(sigma, x):
        return (g.play(sigma[0], x[0]), h.play(sigma[1], x[1]))

    def coutility(sigma, x, r):
        return (g.coutility(sigma[0], x[0], r[0]), h.coutility(sigma[1], x[1], r[1]))

    def equilibrium(x, k, sigma):
        (s1, s2), (x1, x2) = sigma, x
        y2 = h.play(s2, x2)
        y1 = g.play(s1, x1)
        k1 = Continuation.from_function(g.moves, lambda y: k((y, y2))[0])
        k2 = Continuation.from_function(h.moves, lambda y: k((y1, y))[1])
        return g.equilibrium(x1, k1, s1) and h.equilibrium(x2, k2, s2)

    return OpenGame(
        states=product(g.states, h.states),
        coutilities=product(g.coutilities, h.coutilities),
        moves=product(g.moves, h.moves),
        utilities=product(g.utilities, h.utilities),
        strategies=product(g.strategies, h.strategies),
        play_fn=play,
        coutility_fn=coutility,
        equilibrium_fn=equilibrium,
        name=f"({g.name} x {h.name})",
        affine_invariant=g.affine_invariant and h.affine_invariant,
    )


def symmetry(first, second) -> OpenGame:
    """The braiding game (X1 x X2, S1 x S2) -> (X2 x X1, S2 x S1).

    `first` and `second` are (states, coutilities) boundary pairs.
    """
    (x1, s1), (x2, s2) = first, second
    return OpenGame(
        states=product(x1, x2),
        coutilities=product(s1, s2),
        moves=product(x2, x1),
        utilities=product(s2, s1),
        strategies=UNIT,
        play_fn=lambda sigma, x: (x[1], x[0]),
        coutility_fn=lambda sigma, x, r: (r[1], r[0]),
        equilibrium_fn=lambda x, k, sigma: True,
        name="swap",
        affine_invariant=True,
    )


def reindex_state(game: OpenGame, states: FinSet, to_old: Callable[[Hashable], Hashable]) -> OpenGame:
    """Precompose the state set with `to_old`, leaving everything else alone."""
    reindexed = replace(
        game,
        states=states,
        play_fn=lambda sigma, x: game.play(sigma, to_old(x)),
        coutility_fn=lambda sigma, x, r: game.coutility(sigma, to_old(x), r),
        equilibrium_fn=lambda x, k, sigma: game.equilibrium(to_old(x), k, sigma),
        at_tolerance=None,
    )
    if game.at_tolerance is not None:
        object.__setattr__(
            reindexed,
            "at_tolerance",
            lambda eps: reindex_state(game.at_tolerance(eps), states, to_old),
        )
    return reindexed


def with_unit_state(game: OpenGame) -> OpenGame:
    """Give a game whose state set is a singleton the canonical state 1."""
    if len(game.states) != 1:
        raise BoundaryMismatch(f"{game.name} has {len(game.states)} states, expected one")
    (only,) = game.states.elements
    return reindex_state(game, UNIT, lambda _: only)


def play_table(game: OpenGame) -> Dict[Hashable, Dict[Hashable, Hashable]]:
    return {sigma: {x: game.play(sigma, x) for x in game.states} for sigma in game.strategies}