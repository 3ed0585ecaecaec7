# engine/morphisms.py
"""Coutility-free games and the morphisms between them.

A coutility-free game has state set 1, coutility set equal to its utility
set R, and passes utilities back unchanged. A morphism (α_Y, α_Σ) must
preserve play and transport equilibria; validity is a checked property so
that a failing check can hand back its counterexample.
"""
import itertools
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, Hashable, Iterable, List, Optional, Sequence

from tqdm import tqdm

from config import settings

from .carriers import UNIT, UNIT_ELEMENT
from .errors import BoundaryMismatch, EnumerationTooLarge, InvalidMorphism, NotCoutilityFree
from .open_game import Continuation, OpenGame

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoutilityFreeGame:
    """An open game (1, R) -> (Y, R) whose coutility returns r unchanged."""

    game: OpenGame

    def __post_init__(self):
        g = self.game
        if g.states != UNIT:
            raise NotCoutilityFree(f"{g.name} has state set {g.states!r}, expected 1")
        if g.coutilities != g.utilities:
            raise NotCoutilityFree(f"{g.name} has coutilities {g.coutilities!r} != utilities {g.utilities!r}")
        for sigma in g.strategies:
            for r in g.utilities.samples():
                if g.coutility(sigma, UNIT_ELEMENT, r) != r:
                    raise NotCoutilityFree(f"{g.name}: coutility({sigma!r}, {r!r}) is not {r!r}")

    @property
    def moves(self):
        return self.game.moves

    @property
    def utilities(self):
        return self.game.utilities

    @property
    def strategies(self):
        return self.game.strategies

    @property
    def name(self) -> str:
        return self.game.name

    @property
    def affine_invariant(self) -> bool:
        return self.game.affine_invariant

    def play(self, sigma: Hashable) -> Hashable:
        return self.game.play(sigma, UNIT_ELEMENT)

    def equilibrium(self, k: Continuation, sigma: Hashable) -> bool:
        return self.game.equilibrium(UNIT_ELEMENT, k, sigma)

    def at_tolerance(self, epsilon: float) -> Optional["CoutilityFreeGame"]:
        if self.game.at_tolerance is None:
            return None
        return CoutilityFreeGame(self.game.at_tolerance(epsilon))


@dataclass(frozen=True, eq=False)
class GameMorphism:
    alpha_y: Dict[Hashable, Hashable]
    alpha_sigma: Dict[Hashable, Hashable]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GameMorphism)
            and self.alpha_y == other.alpha_y
            and self.alpha_sigma == other.alpha_sigma
        )


@dataclass(frozen=True)
class MorphismCheck:
    passed: bool
    condition: Optional[str] = None
    sigma: Any = None
    state: Any = None
    continuation: Optional[Continuation] = None
    sampled: bool = False
    continuations_checked: int = 0

    def __bool__(self) -> bool:
        return self.passed


def identity_morphism(game) -> GameMorphism:
    return GameMorphism({y: y for y in game.moves}, {s: s for s in game.strategies})


def compose_morphisms(alpha: GameMorphism, beta: GameMorphism) -> GameMorphism:
    """beta . alpha"""
    return GameMorphism(
        {y: beta.alpha_y[z] for y, z in alpha.alpha_y.items()},
        {s: beta.alpha_sigma[t] for s, t in alpha.alpha_sigma.items()},
    )


def _as_open_game(game) -> OpenGame:
    return game.game if isinstance(game, CoutilityFreeGame) else game


def _check_totality(alpha: GameMorphism, source: OpenGame, target: OpenGame) -> None:
    for y in source.moves:
        if alpha.alpha_y.get(y, _MISSING) not in target.moves:
            raise InvalidMorphism(f"alpha_Y is not a total map into the target moves at {y!r}")
    for s in source.strategies:
        if alpha.alpha_sigma.get(s, _MISSING) not in target.strategies:
            raise InvalidMorphism(f"alpha_Sigma is not a total map into the target strategies at {s!r}")


_MISSING = object()


def _continuations(moves, values: Sequence[Any]) -> Iterable[Continuation]:
    # lexicographic in (move order, value order)
    for choice in itertools.product(values, repeat=len(moves)):
        yield Continuation(moves, dict(zip(moves, choice)))


def _first_transport_failure(alpha, source, target, continuations, offset=0):
    for i, k in enumerate(continuations):
        pulled = Continuation.from_function(source.moves, lambda y: k(alpha.alpha_y[y]))
        for x in source.states:
            for sigma in source.strategies:
                if source.equilibrium(x, pulled, sigma) and not target.equilibrium(
                    x, k, alpha.alpha_sigma[sigma]
                ):
                    return offset + i, sigma, x, k
    return None


def check_morphism(
    alpha: GameMorphism,
    source,
    target,
    guard: int = None,
    k_sample: Optional[List[Continuation]] = None,
    threads: int = None,
    progress: bool = False,
) -> MorphismCheck:
    """Check play preservation and equilibrium transport for every strategy.

    Both games must share their state set and utility set; for coutility-free
    games the state set is 1 and this is exactly the two-condition definition.
    Equilibrium transport is checked against every k : Y' -> R unless R is
    infinite (its probe values are enumerated instead) or an explicit
    `k_sample` is supplied; both cases mark the result as sampled.
    """
    source, target = _as_open_game(source), _as_open_game(target)
    guard = settings.ENUMERATION_GUARD if guard is None else guard
    threads = settings.THREADS if threads is None else threads
    if source.states != target.states or source.utilities != target.utilities:
        raise BoundaryMismatch(f"{source.name} and {target.name} do not share state and utility sets")
    _check_totality(alpha, source, target)

    for x in source.states:
        for sigma in source.strategies:
            if alpha.alpha_y[source.play(sigma, x)] != target.play(alpha.alpha_sigma[sigma], x):
                return MorphismCheck(False, condition="play", sigma=sigma, state=x)

    sampled = k_sample is not None or not target.utilities.is_finite
    if k_sample is not None:
        continuations = list(tqdm(k_sample, disable=not progress, desc="continuations"))
    else:
        values = target.utilities.samples()
        count = len(values) ** len(target.moves)
        if count > guard:
            raise EnumerationTooLarge(
                f"{len(values)}^{len(target.moves)} = {count} continuations exceed the guard {guard}"
            )
        logger.debug("Enumerating %d continuations over %d moves", count, len(target.moves))
        continuations = list(
            tqdm(_continuations(target.moves, values), total=count, disable=not progress, desc="continuations")
        )

    if threads > 1 and len(continuations) > threads:
        size = -(-len(continuations) // threads)
        chunks = [(i, continuations[i:i + size]) for i in range(0, len(continuations), size)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            found = list(
                pool.map(lambda c: _first_transport_failure(alpha, source, target, c[1], c[0]), chunks)
            )
        failures = [f for f in found if f is not None]
        failure = min(failures, key=lambda f: f[0]) if failures else None
    else:
        failure = _first_transport_failure(alpha, source, target, continuations)

    if failure is not None:
        _, sigma, x, k = failure
        return MorphismCheck(
            False, condition="equilibrium", sigma=sigma, state=x, continuation=k,
            sampled=sampled, continuations_checked=len(continuations),
        )
    return MorphismCheck(True, sampled=sampled, continuations_checked=len(continuations))


def random_continuations(moves, values: Sequence[Any], count: int, seed: int = 0) -> List[Continuation]:
    """Seeded sample of continuations, for boundaries too large to enumerate."""
    rng = random.Random(seed)
    return [Continuation(moves, {y: rng.choice(values) for y in moves}) for _ in range(count)]


def require_valid(alpha: GameMorphism, source, target, **check_options) -> None:
    result = check_morphism(alpha, source, target, **check_options)
    if not result:
        raise InvalidMorphism(
            f"Morphism violates the {result.condition} condition at strategy {result.sigma!r}"
        )
