# engine/strategies.py
"""Finite representations of iterated-game strategies Y* -> Σ.

Every representation answers the two questions of the final coalgebra of
strategies: what to play now, and which strategy to follow after a move.
`key()` names the behaviour of a strategy so that explorations of one root
strategy can merge histories that lead to the same place.
"""
import itertools
from collections import deque
from typing import Dict, Hashable, Iterator, Mapping, Protocol, Sequence, Tuple

from .carriers import FinSet
from .errors import InvalidFinSet, UnknownMove

StreamPrefix = Tuple[Hashable, ...]


class HistoryStrategy(Protocol):
    def now(self) -> Hashable: ...

    def later(self, y: Hashable) -> "HistoryStrategy": ...

    def key(self) -> Hashable: ...


class StrategyTransducer:
    """Finite-state strategy: σ(w) = stage(step*(initial, w))."""

    def __init__(
        self,
        states: Sequence[Hashable],
        initial: Hashable,
        stage: Mapping[Hashable, Hashable],
        step: Mapping[Tuple[Hashable, Hashable], Hashable],
        moves: FinSet,
    ):
        if initial not in states:
            raise InvalidFinSet(f"Initial state {initial!r} is not a state")
        for q in states:
            if q not in stage:
                raise InvalidFinSet(f"No stage strategy for state {q!r}")
            for y in moves:
                if step.get((q, y)) not in states:
                    raise UnknownMove(f"Transition from {q!r} on {y!r} is missing or leaves the state set")
        reachable = _reachable(initial, moves, step)
        self.moves = moves
        self.states = FinSet(q for q in states if q in reachable)
        self.initial = initial
        self.stage = {q: stage[q] for q in self.states}
        self.step = {(q, y): step[(q, y)] for q in self.states for y in moves}
        self._cursor = initial

    def __repr__(self) -> str:
        return f"StrategyTransducer({len(self.states)} states, at {self._cursor!r})"

    def run(self, history: Sequence[Hashable], start: Hashable = None) -> Hashable:
        q = self.initial if start is None else start
        for y in history:
            q = self.step[(q, y)]
        return q

    def strategy_at(self, history: Sequence[Hashable]) -> Hashable:
        return self.stage[self.run(history, self._cursor)]

    def rerooted(self, y: Hashable) -> "StrategyTransducer":
        """ltr: the machine restarted after y, unreachable states pruned."""
        return StrategyTransducer(
            self.states, self.step[(self._cursor, y)], self.stage, self.step, self.moves
        )

    # HistoryStrategy over cursors, sharing the tables

    def now(self) -> Hashable:
        return self.stage[self._cursor]

    def later(self, y: Hashable) -> "StrategyTransducer":
        return self.at(self.step[(self._cursor, y)])

    def key(self) -> Hashable:
        return self._cursor

    def at(self, q: Hashable) -> "StrategyTransducer":
        cursor = object.__new__(StrategyTransducer)
        cursor.__dict__.update(self.__dict__)
        cursor._cursor = q
        return cursor

    def shortest_history(self, target: Hashable) -> StreamPrefix:
        """Lexicographically first shortest input history reaching `target`."""
        parents: Dict[Hashable, StreamPrefix] = {self.initial: ()}
        queue = deque([self.initial])
        while queue:
            q = queue.popleft()
            if q == target:
                return parents[q]
            for y in self.moves:
                nxt = self.step[(q, y)]
                if nxt not in parents:
                    parents[nxt] = parents[q] + (y,)
                    queue.append(nxt)
        raise KeyError(target)


def _reachable(initial, moves, step):
    seen = {initial}
    queue = deque([initial])
    while queue:
        q = queue.popleft()
        for y in moves:
            nxt = step[(q, y)]
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


class DepthTable:
    """Exhaustive strategy on histories shorter than `depth`, `default` beyond."""

    def __init__(
        self,
        depth: int,
        table: Mapping[StreamPrefix, Hashable],
        default: Hashable,
        moves: FinSet,
        prefix: StreamPrefix = (),
    ):
        self.depth = depth
        self.table = table
        self.default = default
        self.moves = moves
        self.prefix = prefix

    @classmethod
    def build(cls, depth: int, table: Mapping[StreamPrefix, Hashable], default: Hashable, moves: FinSet) -> "DepthTable":
        for history in histories(moves, depth):
            if history not in table:
                raise InvalidFinSet(f"Depth table undefined at history {history!r}")
        return cls(depth, dict(table), default, moves)

    def __repr__(self) -> str:
        return f"DepthTable(depth={self.depth}, prefix={self.prefix!r})"

    def strategy_at(self, history: Sequence[Hashable]) -> Hashable:
        full = self.prefix + tuple(history)
        return self.table[full] if len(full) < self.depth else self.default

    def now(self) -> Hashable:
        return self.strategy_at(())

    def later(self, y: Hashable) -> "DepthTable":
        return DepthTable(self.depth, self.table, self.default, self.moves, self.prefix + (y,))

    def key(self) -> Hashable:
        # past the table every position behaves the same
        return self.prefix if len(self.prefix) < self.depth else None

    def to_transducer(self) -> StrategyTransducer:
        remaining = max(self.depth - len(self.prefix), 0)
        states = list(histories(self.moves, remaining)) + [None]
        stage = {w: self.strategy_at(w) for w in states[:-1]}
        stage[None] = self.default
        step = {}
        for w in states:
            for y in self.moves:
                step[(w, y)] = w + (y,) if w is not None and len(w) + 1 < remaining else None
        initial = () if remaining > 0 else None
        return StrategyTransducer(states, initial, stage, step, self.moves)


def histories(moves: FinSet, depth: int) -> Iterator[StreamPrefix]:
    """All histories shorter than `depth`, shortest first, lexicographic within a length."""
    for length in range(depth):
        yield from itertools.product(moves, repeat=length)


def tabulate(strategy, moves: FinSet, depth: int, default: Hashable = None) -> DepthTable:
    """Materialize any history strategy as a depth table."""
    table = {}
    for w in histories(moves, depth):
        current = strategy
        for y in w:
            current = current.later(y)
        table[w] = current.now()
    if default is None:
        default = strategy.now()
    return DepthTable(depth, table, default, moves)
