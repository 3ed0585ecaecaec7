# engine/iteration.py
"""The infinite iteration G_ω of a coutility-free stage game G.

Strategies of G_ω are history functions Y* -> Σ_G, given here by finite
representations (see engine.strategies); plays are move streams, produced
lazily and compared to a finite depth. Equilibria are the greatest fixpoint
of the operator Φ; it is approached from above by the Kleene approximants
(`phi_check`) and decided exactly for finite-memory strategies under
discounted utilities (`gfp_membership_exact`).
"""
import itertools
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Hashable, Iterable, Iterator, List, Mapping, Optional, Tuple

from config import settings

from .carriers import UNIT, FinSet, pack, product
from .conditioning import ConditionedStrategy
from .errors import (
    ApproximateUtilityWarning,
    EmptyMoveSet,
    NotAffineInvariant,
    NumericallyMarginal,
    UnsupportedUtility,
)
from .morphisms import CoutilityFreeGame, GameMorphism, MorphismCheck, check_morphism
from .open_game import Continuation, OpenGame, equilibrium_set
from .strategies import DepthTable, HistoryStrategy, StrategyTransducer, StreamPrefix, histories, tabulate
from .two_cells import fg_object
from .utility import UtilityFunctional, UtilityKind, advance, evaluate_prefix, horizon_for

logger = logging.getLogger(__name__)


class VerdictStatus(Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Witness:
    history: StreamPrefix
    deviation: Optional[Hashable] = None


@dataclass(frozen=True)
class Verdict:
    status: VerdictStatus
    depth_checked: float
    tolerance: float
    witness: Optional[Witness] = None
    approximate: bool = False

    def __post_init__(self):
        if self.status is VerdictStatus.FAILS and self.witness is None:
            raise ValueError("A failing verdict needs a witness")

    @property
    def holds(self) -> bool:
        return self.status is VerdictStatus.HOLDS

    @property
    def fails(self) -> bool:
        return self.status is VerdictStatus.FAILS

    def to_dict(self, encode: Callable[[Hashable], object] = lambda label: label) -> dict:
        return {
            "status": self.status.value,
            "depth_checked": "inf" if math.isinf(self.depth_checked) else int(self.depth_checked),
            "tolerance": self.tolerance,
            "approximate": self.approximate,
            "witness": None
            if self.witness is None
            else {
                "history": [encode(y) for y in self.witness.history],
                "deviation": None if self.witness.deviation is None else encode(self.witness.deviation),
            },
        }


# streams


def stream(stage: CoutilityFreeGame, strategy: HistoryStrategy) -> Iterator[Hashable]:
    """Self-play of `strategy`, one move per round, forever."""
    current = strategy
    while True:
        y = stage.play(current.now())
        yield y
        current = current.later(y)


def play_stream(stage: CoutilityFreeGame, strategy: HistoryStrategy, depth: int) -> StreamPrefix:
    """The first `depth` moves of P_ω(strategy)."""
    return tuple(itertools.islice(stream(stage, strategy), depth))


@dataclass(frozen=True)
class BisimResult:
    equal: bool
    depth: int
    index: Optional[int] = None

    def __bool__(self) -> bool:
        return self.equal


def bisim_check(first: Iterable[Hashable], second: Iterable[Hashable], depth: int) -> BisimResult:
    """Compare heads and advance tails up to `depth` steps."""
    left, right = iter(first), iter(second)
    missing = object()
    for index in range(depth):
        a, b = next(left, missing), next(right, missing)
        if a is missing or b is missing or a != b:
            return BisimResult(False, depth, index)
    return BisimResult(True, depth)


def agree_to_depth(first: HistoryStrategy, second: HistoryStrategy, moves: FinSet, depth: int) -> bool:
    """Whether two strategies choose the same stage strategy on every history shorter than `depth`."""
    frontier = [(first, second)]
    for _ in range(depth):
        seen = set()
        next_frontier = []
        for a, b in frontier:
            if a.now() != b.now():
                return False
            for y in moves:
                pair = (a.later(y), b.later(y))
                key = (pair[0].key(), pair[1].key())
                if key not in seen:
                    seen.add(key)
                    next_frontier.append(pair)
        frontier = next_frontier
    return True


# the iterated game


class IteratedGame:
    """G_ω with its coalgebra map ⟨⟨now, ltr⟩, ⟨hd, tl⟩⟩ and equilibrium checks."""

    def __init__(
        self,
        stage: CoutilityFreeGame,
        depth: int = None,
        epsilon: float = None,
        max_horizon: int = None,
        threads: int = None,
    ):
        if len(stage.moves) == 0:
            raise EmptyMoveSet(f"{stage.name} has no moves to iterate")
        if len(stage.strategies) == 0:
            raise EmptyMoveSet(f"{stage.name} has no stage strategies to iterate")
        self.stage = stage
        self.depth = settings.DEFAULT_DEPTH if depth is None else depth
        self.epsilon = settings.EPSILON if epsilon is None else epsilon
        self.max_horizon = settings.MAX_HORIZON if max_horizon is None else max_horizon
        self.threads = settings.THREADS if threads is None else threads

    @property
    def moves(self) -> FinSet:
        return self.stage.moves

    # coalgebra structure

    @staticmethod
    def now(strategy: HistoryStrategy) -> Hashable:
        return strategy.now()

    @staticmethod
    def ltr(strategy: HistoryStrategy) -> Callable[[Hashable], HistoryStrategy]:
        if isinstance(strategy, StrategyTransducer):
            return strategy.rerooted
        return strategy.later

    @staticmethod
    def hd(prefix: StreamPrefix) -> Hashable:
        return prefix[0]

    @staticmethod
    def tl(prefix: StreamPrefix) -> StreamPrefix:
        return prefix[1:]

    def play_stream(self, strategy: HistoryStrategy, depth: int = None) -> StreamPrefix:
        return play_stream(self.stage, strategy, self.depth if depth is None else depth)

    def coalgebra_map_holds(self, strategy: HistoryStrategy, depth: int = None) -> bool:
        """⟨hd, tl⟩(P_ω σ) = P_{F_G G_ω}(⟨now, ltr⟩ σ), compared on `depth` tail moves."""
        depth = self.depth if depth is None else depth
        played = self.play_stream(strategy, depth + 1)
        first = self.stage.play(self.now(strategy))
        rest = self.play_stream(self.ltr(strategy)(first), depth)
        return (self.hd(played), self.tl(played)) == (first, rest)

    # utilities

    def _horizon(self, k: UtilityFunctional, epsilon: float) -> Tuple[int, bool]:
        horizon = horizon_for(k, epsilon, self.max_horizon)
        tail = evaluate_prefix(k, (next(iter(self.moves)),) * max(horizon, 1)).tail_bound
        approximate = k.approximate or tail > epsilon
        if tail > epsilon:
            message = f"Tail bound {tail:.3g} exceeds tolerance {epsilon:.3g} at horizon {horizon}"
            logger.warning(message)
            warnings.warn(message, ApproximateUtilityWarning, stacklevel=3)
        return horizon, approximate

    def stage_continuation(self, strategy: HistoryStrategy, k: UtilityFunctional, horizon: int) -> Continuation:
        """y -> k(y :: P_ω(ltr(σ)(y))), evaluated on a prefix of length `horizon`."""
        table = {}
        for y in self.moves:
            tail = self.play_stream(strategy.later(y), max(horizon - 1, 0))
            table[y] = pack(self.stage.utilities, evaluate_prefix(k, (y,) + tail).value)
        return Continuation(self.moves, table)

    # Kleene approximants of the greatest fixpoint

    def _stage_failure(self, node, horizon: int) -> Optional[Witness]:
        history, strategy, k = node
        c = self.stage_continuation(strategy, k, horizon)
        if self.stage.equilibrium(c, strategy.now()):
            return None
        better = equilibrium_set(self.stage.game, UNIT.elements[0], c)
        return Witness(history, better[0] if better else None)

    def phi_check(
        self, strategy: HistoryStrategy, k: UtilityFunctional, depth: int = None, epsilon: float = None
    ) -> Verdict:
        """Membership of `strategy` in Φ^depth(⊤)(k).

        Histories are explored level by level over every move, played or not;
        the first failing history in (length, lexicographic) order is the
        witness. A failure refutes membership in E_ω; success only places
        the strategy in the depth-th approximant.
        """
        depth = self.depth if depth is None else depth
        epsilon = self.epsilon if epsilon is None else epsilon
        if depth < 1:
            raise ValueError(f"depth must be at least 1, got {depth}")
        horizon, approximate = self._horizon(k, epsilon)
        affine = self.stage.affine_invariant
        root_k = k.without_offset() if affine else k
        frontier = [((), strategy, root_k)]

        for level in range(depth):
            logger.debug("phi_check level %d: %d distinct positions", level, len(frontier))
            if self.threads > 1 and len(frontier) > 1:
                with ThreadPoolExecutor(max_workers=self.threads) as pool:
                    failures = list(pool.map(lambda node: self._stage_failure(node, horizon), frontier))
            else:
                failures = [self._stage_failure(node, horizon) for node in frontier]
            for witness in failures:
                if witness is not None:
                    status = VerdictStatus.UNKNOWN if approximate else VerdictStatus.FAILS
                    return Verdict(status, level + 1, epsilon, witness, approximate)

            seen = set()
            next_frontier = []
            for history, current, kk in frontier:
                for y in self.moves:
                    child_k = advance(kk, y)
                    if affine:
                        # E_G ignores translations of the continuation
                        child_k = child_k.without_offset()
                    child = current.later(y)
                    key = (child.key(), child_k)
                    if key not in seen:
                        seen.add(key)
                        next_frontier.append((history + (y,), child, child_k))
            frontier = next_frontier

        return Verdict(VerdictStatus.HOLDS, depth, epsilon, approximate=approximate)

    # exact decision for finite-memory strategies

    def self_play_values(self, machine: StrategyTransducer, k: UtilityFunctional) -> Dict[Hashable, Tuple[float, ...]]:
        """Exact discounted self-play value from every machine state, unscaled."""
        delta = k.discount

        def successor(q):
            return machine.step[(q, self.stage.play(machine.stage[q]))]

        values = {}
        for q in machine.states:
            mu, lam = _brent(successor, q)
            orbit = [q]
            for _ in range(mu + lam - 1):
                orbit.append(successor(orbit[-1]))
            payoffs = [k.payoff(self.stage.play(machine.stage[p])) for p in orbit]
            head = [0.0] * k.dimension
            for i in range(mu):
                for j, c in enumerate(payoffs[i]):
                    head[j] += delta ** i * c
            cycle = [0.0] * k.dimension
            for i in range(lam):
                for j, c in enumerate(payoffs[mu + i]):
                    cycle[j] += delta ** i * c
            factor = delta ** mu / (1 - delta ** lam)
            values[q] = tuple(h + factor * c for h, c in zip(head, cycle))
        return values

    def gfp_membership_exact(
        self, strategy: StrategyTransducer, k: UtilityFunctional, epsilon: float = None
    ) -> Verdict:
        """Decide strategy ∈ E_ω(k) by one-stage deviations at every machine state."""
        epsilon = self.epsilon if epsilon is None else epsilon
        if not self.stage.affine_invariant:
            raise NotAffineInvariant(f"{self.stage.name} is not flagged positive-affine invariant; use phi_check")
        if k.kind is not UtilityKind.DISCOUNTED:
            raise UnsupportedUtility(f"Exact membership needs a discounted utility, got {k.kind.value}")
        machine = StrategyTransducer(strategy.states, strategy.key(), strategy.stage, strategy.step, strategy.moves)
        values = self.self_play_values(machine, k)
        probe = self.stage.at_tolerance
        strict = probe(0.0) if probe else None
        loose = probe(2 * epsilon) if probe else None

        for q in machine.states:
            table = {}
            for y in self.moves:
                following = values[machine.step[(q, y)]]
                vector = tuple(
                    k.affine_scale * (u + k.discount * v) for u, v in zip(k.payoff(y), following)
                )
                table[y] = pack(self.stage.utilities, vector)
            c = Continuation(self.moves, table)
            sigma = machine.stage[q]
            member = self.stage.equilibrium(c, sigma)
            if strict is not None and strict.equilibrium(c, sigma) != loose.equilibrium(c, sigma):
                raise NumericallyMarginal(
                    f"Deviation gain at state {q!r} lies within {epsilon:.3g} of the decision boundary"
                )
            if not member:
                better = equilibrium_set(self.stage.game, UNIT.elements[0], c)
                witness = Witness(machine.shortest_history(q), better[0] if better else None)
                logger.info("Exact check fails at state %r", q)
                return Verdict(VerdictStatus.FAILS, math.inf, epsilon, witness)
        return Verdict(VerdictStatus.HOLDS, math.inf, epsilon)

    def discount_threshold(
        self,
        strategy: StrategyTransducer,
        stage_payoff: Mapping[Hashable, Tuple[float, ...]],
        low: float,
        high: float,
        resolution: float = 1e-3,
    ) -> Tuple[float, float]:
        """Bisect for the discount at which `strategy` becomes an exact equilibrium.

        `low` must fail and `high` must hold; returns the final bracket.
        """
        while high - low > resolution:
            middle = (low + high) / 2
            k = UtilityFunctional.discounted(stage_payoff, middle)
            try:
                holds = self.gfp_membership_exact(strategy, k).holds
            except NumericallyMarginal:
                return middle, middle
            if holds:
                high = middle
            else:
                low = middle
        return low, high


def iterate_game(stage: CoutilityFreeGame, depth: int = None, **options) -> IteratedGame:
    return IteratedGame(stage, depth=depth, **options)


def _brent(f: Callable[[Hashable], Hashable], x0: Hashable) -> Tuple[int, int]:
    """Tail length mu and cycle length lambda of the orbit of x0 under f."""
    power = lam = 1
    tortoise, hare = x0, f(x0)
    while tortoise != hare:
        if power == lam:
            tortoise = hare
            power *= 2
            lam = 0
        hare = f(hare)
        lam += 1
    tortoise = hare = x0
    for _ in range(lam):
        hare = f(hare)
    mu = 0
    while tortoise != hare:
        tortoise, hare = f(tortoise), f(hare)
        mu += 1
    return mu, lam


# coalgebras of F_G and their unfoldings


def reachable_strategies(later: Mapping[Tuple[Hashable, Hashable], Hashable], moves: FinSet, start: Hashable) -> List[Hashable]:
    seen = [start]
    index = 0
    while index < len(seen):
        current = seen[index]
        for y in moves:
            nxt = later[(current, y)]
            if nxt not in seen:
                seen.append(nxt)
        index += 1
    return seen


@dataclass(frozen=True, eq=False)
class FiniteCoalgebra:
    """A game H with a map H -> F_G H given by now/ltr on strategies and hd/tl on moves."""

    h: CoutilityFreeGame
    now_h: Mapping[Hashable, Hashable]
    ltr_h: Mapping[Tuple[Hashable, Hashable], Hashable]
    hd_h: Mapping[Hashable, Hashable]
    tl_h: Mapping[Hashable, Hashable]

    @classmethod
    def free(
        cls,
        stage: CoutilityFreeGame,
        strategies: FinSet,
        now: Mapping[Hashable, Hashable],
        later: Mapping[Tuple[Hashable, Hashable], Hashable],
        equilibrium: Callable[[Continuation, Hashable], bool] = None,
        name: str = "H",
    ) -> "FiniteCoalgebra":
        """Coalgebra whose moves (y, s) read "play y, then self-play of s".

        `equilibrium(k, s)` decides E_H; without one E_H is empty, which is
        always a valid coalgebra.
        """
        moves = product(stage.moves, strategies)

        def play(s, _x=None):
            first = stage.play(now[s])
            return (first, later[(s, first)])

        game = OpenGame(
            states=UNIT,
            coutilities=stage.utilities,
            moves=moves,
            utilities=stage.utilities,
            strategies=strategies,
            play_fn=play,
            coutility_fn=lambda s, x, r: r,
            equilibrium_fn=(lambda x, k, s: equilibrium(k, s)) if equilibrium else (lambda x, k, s: False),
            name=name,
        )
        return cls(
            h=CoutilityFreeGame(game),
            now_h=dict(now),
            ltr_h=dict(later),
            hd_h={z: z[0] for z in moves},
            tl_h={z: play(z[1]) for z in moves},
        )

    def structure_morphism(self, stage: CoutilityFreeGame) -> GameMorphism:
        alpha_y = {z: (self.hd_h[z], self.tl_h[z]) for z in self.h.moves}
        alpha_sigma = {
            s: (self.now_h[s], ConditionedStrategy(tuple((y, self.ltr_h[(s, y)]) for y in stage.moves)))
            for s in self.h.strategies
        }
        return GameMorphism(alpha_y, alpha_sigma)

    def validate(self, stage: CoutilityFreeGame, **check_options) -> MorphismCheck:
        return check_morphism(self.structure_morphism(stage), self.h, fg_object(stage, self.h), **check_options)

    def strategy(self, s: Hashable) -> "CoalgebraStrategy":
        """unf_Σ(s) as an infinite lazy history strategy."""
        return CoalgebraStrategy(self, s)

    def stream(self, z: Hashable) -> Iterator[Hashable]:
        """unf_Y(z) as an infinite lazy stream."""
        while True:
            yield self.hd_h[z]
            z = self.tl_h[z]


@dataclass(frozen=True)
class CoalgebraStrategy:
    coalgebra: FiniteCoalgebra = field(compare=False, hash=False)
    position: Hashable = None

    def now(self) -> Hashable:
        return self.coalgebra.now_h[self.position]

    def later(self, y: Hashable) -> "CoalgebraStrategy":
        return CoalgebraStrategy(self.coalgebra, self.coalgebra.ltr_h[(self.position, y)])

    def key(self) -> Hashable:
        return self.position


@dataclass
class Unfolding:
    depth: int
    tables: Dict[Hashable, DepthTable]
    streams: Dict[Hashable, StreamPrefix]
    coalgebra: FiniteCoalgebra

    def unf_sigma(self, s: Hashable) -> DepthTable:
        return self.tables[s]

    def unf_y(self, z: Hashable) -> StreamPrefix:
        return self.streams[z]

    def commutes(self, moves: FinSet) -> bool:
        """Both squares of the coalgebra-morphism diagrams, up to the unfolding depth."""
        c, d = self.coalgebra, self.depth
        if d == 0:
            return True
        for s, table in self.tables.items():
            if table.strategy_at(()) != c.now_h[s]:
                return False
            for y in moves:
                successor = self.tables[c.ltr_h[(s, y)]]
                for w in histories(moves, d - 1):
                    if table.strategy_at((y,) + w) != successor.strategy_at(w):
                        return False
        for z, prefix in self.streams.items():
            if prefix[0] != c.hd_h[z] or prefix[1:] != self.streams[c.tl_h[z]][: d - 1]:
                return False
        return True


def unfold_coalgebra(coalgebra: FiniteCoalgebra, stage: CoutilityFreeGame, depth: int, order: str = "breadth") -> Unfolding:
    """unf_Σ and unf_Y truncated at `depth`.

    `order` picks the traversal building the strategy tables: "breadth"
    tabulates history by history from the root, "depth" recurses through
    ltr_h and splices the successors' tables.
    """
    moves = stage.moves
    if order == "breadth":
        tables = {
            s: tabulate(coalgebra.strategy(s), moves, depth, coalgebra.now_h[s]) for s in coalgebra.h.strategies
        }
    elif order == "depth":
        tables = {s: _unfold_recursively(coalgebra, moves, s, depth) for s in coalgebra.h.strategies}
    else:
        raise ValueError(f"Unknown traversal order {order!r}")
    streams = {z: tuple(itertools.islice(coalgebra.stream(z), depth)) for z in coalgebra.h.moves}
    return Unfolding(depth, tables, streams, coalgebra)


def _unfold_recursively(coalgebra, moves, s, depth) -> DepthTable:
    def fill(position, remaining, prefix, table):
        if remaining == 0:
            return
        table[prefix] = coalgebra.now_h[position]
        for y in moves:
            fill(coalgebra.ltr_h[(position, y)], remaining - 1, prefix + (y,), table)

    table = {}
    fill(s, depth, (), table)
    return DepthTable(depth, table, coalgebra.now_h[s], moves)


def transported_continuation(
    coalgebra: FiniteCoalgebra, k: UtilityFunctional, horizon: int
) -> Callable[[Hashable, Hashable], Tuple[float, ...]]:
    """k̂(y, z) = k(y :: unf_Y(z)), with unf_Y(z) cut at `horizon` moves."""

    def k_hat(y, z):
        tail = tuple(itertools.islice(coalgebra.stream(z), horizon))
        return evaluate_prefix(k, (y,) + tail).value

    return k_hat


def ehat_membership(
    game: IteratedGame,
    coalgebra: FiniteCoalgebra,
    strategy: HistoryStrategy,
    k: UtilityFunctional,
    depth: int = None,
    epsilon: float = None,
) -> bool:
    """strategy ∈ Ê_H(k): some s unfolds to it (to `depth`) and s ∈ E_H(k . unf_Y)."""
    depth = game.depth if depth is None else depth
    epsilon = game.epsilon if epsilon is None else epsilon
    horizon, _ = game._horizon(k, epsilon)
    k_hat = transported_continuation(coalgebra, k, max(horizon - 1, 0))
    utilities = coalgebra.h.utilities
    for s in coalgebra.h.strategies:
        if not agree_to_depth(coalgebra.strategy(s), strategy, game.moves, depth):
            continue
        pulled = Continuation.from_function(
            coalgebra.h.moves, lambda z: pack(utilities, k_hat(coalgebra.hd_h[z], coalgebra.tl_h[z]))
        )
        if coalgebra.h.equilibrium(pulled, s):
            return True
    return False
