# utils/documents.py
"""JSON file formats for games, stages, strategies, utilities and morphisms.

Every format has a pydantic model that checks its shape; the builder
functions then check it against the engine (totality, label membership)
and return engine objects. Problems with the file itself surface as
ParseError or SchemaError carrying the path and location.
"""
import itertools
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from config import settings
from engine.carriers import REALS, FinSet
from engine.errors import EnumerationTooLarge, ParseError, SchemaError
from engine.iteration import FiniteCoalgebra
from engine.library import Bimatrix, argmax_decision, bimatrix_stage, builtin_strategy
from engine.morphisms import CoutilityFreeGame, GameMorphism
from engine.open_game import Continuation, OpenGame
from engine.strategies import StrategyTransducer
from engine.utility import UtilityFunctional

from .labels import LabelCodec, encode_label

logger = logging.getLogger(__name__)

Model = TypeVar("Model", bound=BaseModel)

HISTORY_SEPARATOR = "|"


class Document(BaseModel):
    model_config = ConfigDict(extra="forbid")


# file access


def load_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    logger.info("Loaded %s", path)
    return payload


def parse(model: Type[Model], payload: Any, source: str = "<input>") -> Model:
    try:
        return model.model_validate(payload)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise SchemaError(f"{source}: {location}: {first['msg']}") from exc


# open games


class DomDocument(Document):
    X: List[str]
    S: List[str]


class CodDocument(Document):
    Y: List[str]
    R: List[str]


class EquilibriumEntry(Document):
    x: str
    k: Dict[str, str]
    sigma: str


class GameDocument(Document):
    name: str = "game"
    dom: DomDocument
    cod: CodDocument
    strategies: List[str]
    play: Dict[str, Dict[str, str]]
    coutility: Dict[str, Dict[str, Dict[str, str]]]
    equilibrium: Union[Literal["always", "never", "argmax"], List[EquilibriumEntry]]


def _lookup(table: Dict[str, Any], key: str, where: str) -> Any:
    if key not in table:
        raise SchemaError(f"{where} is missing an entry for {key!r}")
    return table[key]


def game_from_document(doc: GameDocument) -> OpenGame:
    """Build a finite open game; plays and coutilities are tabulated and checked total."""
    states, coutilities = FinSet(doc.dom.X), FinSet(doc.dom.S)
    moves, utilities = FinSet(doc.cod.Y), FinSet(doc.cod.R)
    strategies = FinSet(doc.strategies)

    play = {}
    coutility = {}
    for sigma in strategies:
        row = _lookup(doc.play, sigma, "play")
        for x in states:
            y = _lookup(row, x, f"play.{sigma}")
            if y not in moves:
                raise SchemaError(f"play.{sigma}.{x}: {y!r} is not in Y")
            play[(sigma, x)] = y
            cells = _lookup(_lookup(doc.coutility, sigma, "coutility"), x, f"coutility.{sigma}")
            for r in utilities:
                s = _lookup(cells, r, f"coutility.{sigma}.{x}")
                if s not in coutilities:
                    raise SchemaError(f"coutility.{sigma}.{x}.{r}: {s!r} is not in S")
                coutility[(sigma, x, r)] = s

    if doc.equilibrium == "always":
        equilibrium = lambda x, k, sigma: True
    elif doc.equilibrium == "never":
        equilibrium = lambda x, k, sigma: False
    elif doc.equilibrium == "argmax":
        # R is listed from worst to best
        def equilibrium(x, k, sigma):
            best = max(utilities.index(k(play[(other, x)])) for other in strategies)
            return utilities.index(k(play[(sigma, x)])) == best
    else:
        members = set()
        for i, entry in enumerate(doc.equilibrium):
            where = f"equilibrium.{i}"
            if entry.x not in states or entry.sigma not in strategies:
                raise SchemaError(f"{where}: unknown state or strategy")
            values = tuple(_lookup(entry.k, y, f"{where}.k") for y in moves)
            if any(r not in utilities for r in values):
                raise SchemaError(f"{where}.k: values must lie in R")
            members.add((entry.x, values, entry.sigma))
        equilibrium = lambda x, k, sigma: (x, tuple(k(y) for y in moves), sigma) in members

    return OpenGame(
        states=states,
        coutilities=coutilities,
        moves=moves,
        utilities=utilities,
        strategies=strategies,
        play_fn=lambda sigma, x: play[(sigma, x)],
        coutility_fn=lambda sigma, x, r: coutility[(sigma, x, r)],
        equilibrium_fn=equilibrium,
        name=doc.name,
    )


def game_to_document(game: OpenGame, guard: int = None) -> dict:
    """Tabulate a finite game, writing its equilibrium predicate out as an explicit table."""
    guard = settings.ENUMERATION_GUARD if guard is None else guard
    for carrier in (game.states, game.coutilities, game.moves, game.utilities):
        if not carrier.is_finite:
            raise SchemaError(f"{game.name} has an infinite carrier and has no finite document")
    count = len(game.utilities) ** len(game.moves)
    if count * len(game.states) > guard:
        raise EnumerationTooLarge(f"{count} continuations per state exceed the guard {guard}")

    enc = encode_label
    entries = []
    for x in game.states:
        for values in itertools.product(game.utilities, repeat=len(game.moves)):
            k = Continuation(game.moves, dict(zip(game.moves, values)))
            for sigma in game.strategies:
                if game.equilibrium(x, k, sigma):
                    entries.append(
                        {"x": enc(x), "k": {enc(y): enc(r) for y, r in k.items()}, "sigma": enc(sigma)}
                    )
    return {
        "name": game.name,
        "dom": {"X": [enc(x) for x in game.states], "S": [enc(s) for s in game.coutilities]},
        "cod": {"Y": [enc(y) for y in game.moves], "R": [enc(r) for r in game.utilities]},
        "strategies": [enc(s) for s in game.strategies],
        "play": {enc(s): {enc(x): enc(game.play(s, x)) for x in game.states} for s in game.strategies},
        "coutility": {
            enc(s): {
                enc(x): {enc(r): enc(game.coutility(s, x, r)) for r in game.utilities} for x in game.states
            }
            for s in game.strategies
        },
        "equilibrium": entries,
    }


# stage games for iteration


class BimatrixDocument(Document):
    moves1: List[str]
    moves2: List[str]
    payoff: Dict[str, List[float]]


class DecisionDocument(Document):
    moves: List[str]


def bimatrix_from_document(doc: BimatrixDocument) -> Bimatrix:
    moves1, moves2 = FinSet(doc.moves1), FinSet(doc.moves2)
    codec = LabelCodec(itertools.product(moves1, moves2), "profile")
    payoff = {}
    for text, pair in doc.payoff.items():
        if len(pair) != 2:
            raise SchemaError(f"payoff.{text}: expected a pair of payoffs")
        if not all(math.isfinite(v) for v in pair):
            raise SchemaError(f"payoff.{text}: payoffs must be finite numbers")
        payoff[codec.decode(text)] = (pair[0], pair[1])
    return Bimatrix(moves1, moves2, payoff)


def load_stage(path: Union[str, Path], epsilon: float = None) -> Tuple[CoutilityFreeGame, Optional[Bimatrix]]:
    """A bimatrix or single-decision stage game, told apart by its keys.

    The bimatrix is returned alongside its stage game so that callers can
    derive utilities from its payoffs.
    """
    payload = load_json(path)
    source = str(path)
    if isinstance(payload, dict) and "moves1" in payload:
        m = bimatrix_from_document(parse(BimatrixDocument, payload, source))
        return bimatrix_stage(m, epsilon), m
    doc = parse(DecisionDocument, payload, source)
    return CoutilityFreeGame(argmax_decision(FinSet(doc.moves), REALS, epsilon)), None


def load_game(path: Union[str, Path]) -> OpenGame:
    return game_from_document(parse(GameDocument, load_json(path), str(path)))


# continuations


def continuation_from_document(payload: Any, moves: FinSet, utilities, source: str = "<input>") -> Continuation:
    """Decode {move: value}; numeric carriers take numbers or lists, finite ones labels."""
    if not isinstance(payload, dict):
        raise SchemaError(f"{source}: a continuation is an object keyed by moves")
    codec = LabelCodec(moves, "move")
    values = LabelCodec(utilities, "utility") if utilities.is_finite else None
    table = {}
    for text, value in payload.items():
        y = codec.decode(text)
        if values is not None:
            table[y] = values.decode(str(value))
        elif isinstance(value, list):
            table[y] = tuple(float(c) for c in value)
        else:
            table[y] = float(value)
    missing = [encode_label(y) for y in moves if y not in table]
    if missing:
        raise SchemaError(f"{source}: continuation undefined on {missing}")
    return Continuation(moves, table)


# utilities


class UtilityDocument(Document):
    kind: Literal["discounted", "finite_horizon", "mean_payoff_approx"]
    delta: Optional[float] = Field(default=None, ge=0, lt=1)
    horizon: Optional[int] = Field(default=None, ge=1)
    window: Optional[int] = Field(default=None, ge=1)
    stage_payoff: Dict[str, List[float]]


def utility_from_document(doc: UtilityDocument, moves: FinSet, dimension: int = None) -> UtilityFunctional:
    """`dimension`, when given, is the length every stage payoff vector must have."""
    codec = LabelCodec(moves, "move")
    payoff = {}
    for text, vector in doc.stage_payoff.items():
        if dimension is not None and len(vector) != dimension:
            raise SchemaError(f"stage_payoff.{text}: expected {dimension} payoffs, got {len(vector)}")
        if not all(math.isfinite(v) for v in vector):
            raise SchemaError(f"stage_payoff.{text}: payoffs must be finite numbers")
        payoff[codec.decode(text)] = vector
    missing = [encode_label(y) for y in moves if y not in payoff]
    if missing:
        raise SchemaError(f"stage_payoff is missing moves {missing}")
    if doc.kind == "discounted":
        if doc.delta is None:
            raise SchemaError("delta: required for a discounted utility")
        return UtilityFunctional.discounted(payoff, doc.delta)
    if doc.kind == "finite_horizon":
        if doc.horizon is None:
            raise SchemaError("horizon: required for a finite_horizon utility")
        return UtilityFunctional.finite_horizon(payoff, doc.horizon)
    if doc.window is None:
        raise SchemaError("window: required for a mean_payoff_approx utility")
    return UtilityFunctional.mean_payoff_approx(payoff, doc.window)


# repeated-game strategies


class TransducerDocument(Document):
    states: List[str]
    initial: str
    stage: Dict[str, str]
    step: Dict[str, Dict[str, str]]


class BuiltinStrategyDocument(Document):
    builtin: Literal["all_constant", "grim_trigger", "tit_for_tat", "depth_table"]
    params: Dict[str, Any] = {}


def decode_history(text: str, moves: LabelCodec) -> tuple:
    if text == "":
        return ()
    return tuple(moves.decode(part) for part in text.split(HISTORY_SEPARATOR))


def transducer_from_document(doc: TransducerDocument, stage: CoutilityFreeGame) -> StrategyTransducer:
    moves = LabelCodec(stage.moves, "move")
    strategies = LabelCodec(stage.strategies, "stage strategy")
    table = {q: strategies.decode(sigma) for q, sigma in doc.stage.items()}
    step = {}
    for q, row in doc.step.items():
        for text, target in row.items():
            step[(q, moves.decode(text))] = target
    return StrategyTransducer(doc.states, doc.initial, table, step, stage.moves)


def builtin_from_document(doc: BuiltinStrategyDocument, stage: CoutilityFreeGame) -> StrategyTransducer:
    moves = LabelCodec(stage.moves, "move")
    strategies = LabelCodec(stage.strategies, "stage strategy")
    params = {}
    for name, value in doc.params.items():
        if name == "triggers":
            params[name] = [moves.decode(text) for text in value]
        elif name == "table":
            params[name] = {decode_history(h, moves): strategies.decode(s) for h, s in value.items()}
        elif name == "depth":
            params[name] = int(value)
        else:
            params[name] = strategies.decode(value)
    try:
        return builtin_strategy(doc.builtin, stage, **params)
    except TypeError as exc:
        raise SchemaError(f"params: {exc}") from exc


def load_strategy(path: Union[str, Path], stage: CoutilityFreeGame) -> StrategyTransducer:
    payload = load_json(path)
    source = str(path)
    if isinstance(payload, dict) and "builtin" in payload:
        return builtin_from_document(parse(BuiltinStrategyDocument, payload, source), stage)
    return transducer_from_document(parse(TransducerDocument, payload, source), stage)


def load_utility(path: Union[str, Path], stage: CoutilityFreeGame) -> UtilityFunctional:
    doc = parse(UtilityDocument, load_json(path), str(path))
    return utility_from_document(doc, stage.moves, stage.utilities.dimension)


# morphisms and coalgebras


class MorphismDocument(Document):
    alpha_Y: Dict[str, str]
    alpha_Sigma: Dict[str, str]


def morphism_from_document(doc: MorphismDocument, source: OpenGame, target: OpenGame) -> GameMorphism:
    source_moves, target_moves = LabelCodec(source.moves, "source move"), LabelCodec(target.moves, "target move")
    source_sigma = LabelCodec(source.strategies, "source strategy")
    target_sigma = LabelCodec(target.strategies, "target strategy")
    return GameMorphism(
        {source_moves.decode(a): target_moves.decode(b) for a, b in doc.alpha_Y.items()},
        {source_sigma.decode(a): target_sigma.decode(b) for a, b in doc.alpha_Sigma.items()},
    )


class CoalgebraDocument(Document):
    strategies: List[str]
    now: Dict[str, str]
    later: Dict[str, Dict[str, str]]


def coalgebra_from_document(doc: CoalgebraDocument, stage: CoutilityFreeGame) -> FiniteCoalgebra:
    """A free coalgebra with empty E_H; only its unfoldings are read from a file."""
    moves = LabelCodec(stage.moves, "move")
    strategies = LabelCodec(stage.strategies, "stage strategy")
    states = FinSet(doc.strategies)
    now = {s: strategies.decode(_lookup(doc.now, s, "now")) for s in states}
    later = {}
    for s in states:
        row = {moves.decode(text): t for text, t in _lookup(doc.later, s, "later").items()}
        for y in stage.moves:
            if y not in row:
                raise SchemaError(f"later.{s} is missing move {encode_label(y)!r}")
            target = row[y]
            if target not in states:
                raise SchemaError(f"later.{s}: {target!r} is not a strategy")
            later[(s, y)] = target
    return FiniteCoalgebra.free(stage, states, now, later)
