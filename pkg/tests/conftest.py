import itertools
import random
import sys
from pathlib import Path

import pytest

sys.path.append(str(Path(__file__).resolve().parents[1]))

from engine.carriers import FinSet
from engine.library import bimatrix_stage, matching_pennies, prisoners_dilemma
from engine.open_game import Continuation, OpenGame


def labels(prefix: str, count: int) -> FinSet:
    return FinSet(f"{prefix}{i}" for i in range(count))


def all_continuations(moves, values):
    for choice in itertools.product(values, repeat=len(moves)):
        yield Continuation(moves, dict(zip(moves, choice)))


def random_game(rng, states, coutilities, moves, utilities, strategies=2, name="g", density=0.5) -> OpenGame:
    """A game with random tabulated play/coutility and a random equilibrium relation."""
    sigma = labels(name, strategies)
    play = {(s, x): rng.choice(moves.elements) for s in sigma for x in states}
    coutility = {(s, x, r): rng.choice(coutilities.elements) for s in sigma for x in states for r in utilities}
    members = {
        (x, values, s)
        for x in states
        for values in itertools.product(utilities, repeat=len(moves))
        for s in sigma
        if rng.random() < density
    }
    return OpenGame(
        states=states,
        coutilities=coutilities,
        moves=moves,
        utilities=utilities,
        strategies=sigma,
        play_fn=lambda s, x: play[(s, x)],
        coutility_fn=lambda s, x, r: coutility[(s, x, r)],
        equilibrium_fn=lambda x, k, s: (x, tuple(k(y) for y in moves), s) in members,
        name=name,
    )


@pytest.fixture
def rng():
    return random.Random(20240917)


@pytest.fixture
def pd():
    return prisoners_dilemma()


@pytest.fixture
def pd_stage(pd):
    return bimatrix_stage(pd)


@pytest.fixture
def pennies_stage():
    return bimatrix_stage(matching_pennies())
