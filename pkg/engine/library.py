# engine/library.py
"""Stage games and repeated-game strategies used across the engine and CLI."""
import logging
from dataclasses import dataclass, replace
from typing import Dict, Hashable, Iterable, Mapping, Optional, Tuple

from config import settings

from .carriers import REALS, UNIT, FinSet, ProductCarrier, product
from .errors import EmptyMoveSet, UnknownMove
from .morphisms import CoutilityFreeGame
from .open_game import Continuation, OpenGame, tensor, with_unit_state
from .strategies import DepthTable, StrategyTransducer

logger = logging.getLogger(__name__)

Payoff = Tuple[float, float]


def argmax_decision(moves: FinSet, utilities=REALS, epsilon: float = None, name: str = "argmax") -> OpenGame:
    """Single agent choosing a move; σ is an equilibrium if it is an ε-best response."""
    if len(moves) == 0:
        raise EmptyMoveSet(f"{name} needs at least one move")
    epsilon = settings.EPSILON if epsilon is None else epsilon

    def equilibrium(x, k, sigma):
        best = max(k(y) for y in moves)
        return k(sigma) >= best - epsilon

    return OpenGame(
        states=UNIT,
        coutilities=utilities,
        moves=moves,
        utilities=utilities,
        strategies=moves,
        play_fn=lambda sigma, x: sigma,
        coutility_fn=lambda sigma, x, r: r,
        equilibrium_fn=equilibrium,
        name=name,
        affine_invariant=True,
        at_tolerance=lambda eps: argmax_decision(moves, utilities, eps, name),
    )


@dataclass(frozen=True)
class Bimatrix:
    moves1: FinSet
    moves2: FinSet
    payoff: Mapping[Tuple[Hashable, Hashable], Payoff]

    def __post_init__(self):
        if len(self.moves1) == 0 or len(self.moves2) == 0:
            raise EmptyMoveSet("Both players need at least one move")
        for a in self.moves1:
            for b in self.moves2:
                if (a, b) not in self.payoff:
                    raise UnknownMove(f"No payoff for profile ({a!r}, {b!r})")
                if len(self.payoff[(a, b)]) != 2:
                    raise ValueError(f"Payoff for ({a!r}, {b!r}) is not a pair")

    @property
    def profiles(self) -> FinSet:
        return product(self.moves1, self.moves2)

    def stage_payoff(self) -> Dict[Tuple[Hashable, Hashable], Payoff]:
        return {y: tuple(float(c) for c in self.payoff[y]) for y in self.profiles}

    def continuation(self) -> Continuation:
        """The one-shot game as a continuation on profiles."""
        return Continuation(self.profiles, self.stage_payoff())


def prisoners_dilemma(t: float = 5, r: float = 3, p: float = 1, s: float = 0) -> Bimatrix:
    moves = FinSet(["C", "D"])
    return Bimatrix(
        moves,
        moves,
        {("C", "C"): (r, r), ("C", "D"): (s, t), ("D", "C"): (t, s), ("D", "D"): (p, p)},
    )


def matching_pennies() -> Bimatrix:
    moves = FinSet(["H", "T"])
    return Bimatrix(
        moves,
        moves,
        {("H", "H"): (1, -1), ("H", "T"): (-1, 1), ("T", "H"): (-1, 1), ("T", "T"): (1, -1)},
    )


def bimatrix_game(m: Bimatrix, epsilon: float = None) -> OpenGame:
    """Two argmax players side by side; equilibria are pure ε-Nash profiles."""
    epsilon = settings.EPSILON if epsilon is None else epsilon
    joint = with_unit_state(
        tensor(argmax_decision(m.moves1, epsilon=epsilon, name="p1"), argmax_decision(m.moves2, epsilon=epsilon, name="p2"))
    )
    return replace(
        joint,
        name="bimatrix",
        affine_invariant=True,
        at_tolerance=lambda eps: bimatrix_game(m, eps),
    )


def bimatrix_stage(m: Bimatrix, epsilon: float = None) -> CoutilityFreeGame:
    return CoutilityFreeGame(bimatrix_game(m, epsilon))


def constant_equilibrium_game(moves: FinSet, admissible: Iterable[Hashable], utilities=REALS) -> OpenGame:
    """Σ = Y, and E(k) is the fixed set `admissible` whatever k is."""
    admissible = frozenset(admissible)
    unknown = [y for y in admissible if y not in moves]
    if unknown:
        raise UnknownMove(f"Admissible moves {unknown!r} are not moves")
    return OpenGame(
        states=UNIT,
        coutilities=utilities,
        moves=moves,
        utilities=utilities,
        strategies=moves,
        play_fn=lambda sigma, x: sigma,
        coutility_fn=lambda sigma, x, r: r,
        equilibrium_fn=lambda x, k, sigma: sigma in admissible,
        name="constant",
        affine_invariant=True,
    )


# repeated-game strategies


def _require_strategy(stage: CoutilityFreeGame, sigma: Hashable) -> Hashable:
    if sigma not in stage.strategies:
        raise UnknownMove(f"{sigma!r} is not a stage strategy of {stage.name}")
    return sigma


def _is_bimatrix(stage: CoutilityFreeGame) -> bool:
    return isinstance(stage.utilities, ProductCarrier)


def all_constant(stage: CoutilityFreeGame, move: Hashable) -> StrategyTransducer:
    move = _require_strategy(stage, move)
    return StrategyTransducer(
        ["always"], "always", {"always": move}, {("always", y): "always" for y in stage.moves}, stage.moves
    )


def grim_trigger(
    stage: CoutilityFreeGame, cooperate: Hashable, punish: Hashable, triggers: Optional[Iterable[Hashable]] = None
) -> StrategyTransducer:
    """Play `cooperate` until a trigger move is observed, then `punish` forever.

    Triggers default to every move other than the cooperative one.
    """
    cooperate, punish = _require_strategy(stage, cooperate), _require_strategy(stage, punish)
    if triggers is None:
        triggers = [y for y in stage.moves if y != stage.play(cooperate)]
    triggers = frozenset(triggers)
    for y in triggers:
        if y not in stage.moves:
            raise UnknownMove(f"Trigger {y!r} is not a move of {stage.name}")
    step = {}
    for y in stage.moves:
        step[("cooperate", y)] = "punish" if y in triggers else "cooperate"
        step[("punish", y)] = "punish"
    states = ["cooperate", "punish"]
    return StrategyTransducer(states, "cooperate", {"cooperate": cooperate, "punish": punish}, step, stage.moves)


def tit_for_tat(stage: CoutilityFreeGame, cooperate: Hashable, defect: Hashable = None) -> StrategyTransducer:
    """Open with `cooperate`, then echo the last observation.

    In a bimatrix stage each player copies the other's last move, so the
    profile (a, b) is answered with (b, a). In a single-player stage the
    observed move is replayed, falling back to `defect` when it is not a
    stage strategy.
    """
    cooperate = _require_strategy(stage, cooperate)
    if defect is not None:
        defect = _require_strategy(stage, defect)

    def answer(y):
        echo = (y[1], y[0]) if _is_bimatrix(stage) else y
        if echo in stage.strategies:
            return echo
        if defect is None:
            raise UnknownMove(f"Cannot echo {y!r} in {stage.name} without a fallback")
        return defect

    states = ["open"] + [("saw", y) for y in stage.moves]
    table = {"open": cooperate}
    table.update({("saw", y): answer(y) for y in stage.moves})
    step = {(q, y): ("saw", y) for q in states for y in stage.moves}
    return StrategyTransducer(states, "open", table, step, stage.moves)


def depth_table(
    stage: CoutilityFreeGame, depth: int, table: Mapping[Tuple[Hashable, ...], Hashable], default: Hashable
) -> StrategyTransducer:
    default = _require_strategy(stage, default)
    for sigma in table.values():
        _require_strategy(stage, sigma)
    return DepthTable.build(depth, table, default, stage.moves).to_transducer()


BUILTIN_STRATEGIES = {
    "all_constant": all_constant,
    "grim_trigger": grim_trigger,
    "tit_for_tat": tit_for_tat,
    "depth_table": depth_table,
}


def builtin_strategy(name: str, stage: CoutilityFreeGame, **params) -> StrategyTransducer:
    if name not in BUILTIN_STRATEGIES:
        raise UnknownMove(f"Unknown builtin strategy {name!r}; expected one of {sorted(BUILTIN_STRATEGIES)}")
    logger.debug("Building %s strategy with %s", name, params)
    return BUILTIN_STRATEGIES[name](stage, **params)
