import random
from dataclasses import replace

import pytest

from engine.carriers import REALS, FinSet, pack
from engine.errors import (
    ApproximateUtilityWarning,
    EmptyMoveSet,
    NotAffineInvariant,
    NumericallyMarginal,
    UnsupportedUtility,
)
from engine.iteration import (
    FiniteCoalgebra,
    VerdictStatus,
    agree_to_depth,
    bisim_check,
    ehat_membership,
    iterate_game,
    play_stream,
    reachable_strategies,
    stream,
    transported_continuation,
    unfold_coalgebra,
)
from engine.library import all_constant, argmax_decision, constant_equilibrium_game, grim_trigger, tit_for_tat
from engine.morphisms import CoutilityFreeGame
from engine.open_game import Continuation
from engine.strategies import DepthTable, StrategyTransducer, histories, tabulate
from engine.two_cells import fg_object
from engine.utility import UtilityFunctional, evaluate_prefix, horizon_for

CC, CD, DC, DD = ("C", "C"), ("C", "D"), ("D", "C"), ("D", "D")


def _k(pd, delta):
    return UtilityFunctional.from_bimatrix(pd, delta)


def _grim(stage):
    return grim_trigger(stage, CC, DD)


def _random_machine(rng, stage, size):
    states = list(range(size))
    table = {q: rng.choice(stage.strategies.elements) for q in states}
    step = {(q, y): rng.choice(states) for q in states for y in stage.moves}
    return StrategyTransducer(states, 0, table, step, stage.moves)


def _random_coalgebra(rng, stage, size, equilibrium=None):
    strategies = FinSet(f"s{i}" for i in range(size))
    now = {s: rng.choice(stage.strategies.elements) for s in strategies}
    later = {(s, y): rng.choice(strategies.elements) for s in strategies for y in stage.moves}
    return FiniteCoalgebra.free(stage, strategies, now, later, equilibrium)


def _admissible_descendants(stage_moves, admissible):
    """E_H(s): every strategy reachable from s opens with an admissible move."""

    def build(now, later):
        def equilibrium(k, s):
            return all(now[t] in admissible for t in reachable_strategies(later, stage_moves, s))

        return equilibrium

    return build


# streams and the coalgebra map


def test_all_constant_plays_a_constant_stream(pd_stage):
    always_d = all_constant(pd_stage, DD)
    assert play_stream(pd_stage, always_d, 7) == (DD,) * 7


def test_grim_trigger_self_play_never_triggers(pd_stage):
    assert play_stream(pd_stage, _grim(pd_stage), 5) == (CC,) * 5


def test_tit_for_tat_has_one_state_per_observation(pd_stage):
    tft = tit_for_tat(pd_stage, CC)
    assert len(tft.states) == len(pd_stage.moves) + 1
    assert tft.later(CD).now() == DC


def test_rerooting_prunes_unreachable_states(pd_stage):
    after_defection = _grim(pd_stage).rerooted(DC)
    assert list(after_defection.states) == ["punish"]
    assert after_defection.now() == DD


def test_coalgebra_map_law_holds_for_random_machines(pd_stage):
    rng = random.Random(8)
    game = iterate_game(pd_stage)
    for _ in range(30):
        machine = _random_machine(rng, pd_stage, rng.randint(1, 4))
        assert game.coalgebra_map_holds(machine, 16)


def test_bisimilar_strategies_share_their_streams(pd_stage):
    grim = _grim(pd_stage)
    tft = tit_for_tat(pd_stage, CC)
    cooperate = all_constant(pd_stage, CC)
    assert bisim_check(stream(pd_stage, grim), stream(pd_stage, tft), 32)
    assert bisim_check(stream(pd_stage, grim), stream(pd_stage, cooperate), 32).equal
    differs = bisim_check(stream(pd_stage, grim), stream(pd_stage, all_constant(pd_stage, DD)), 32)
    assert not differs and differs.index == 0


def test_depth_table_matches_its_transducer(pd_stage):
    grim = _grim(pd_stage)
    table = tabulate(grim, pd_stage.moves, 3, DD)
    machine = table.to_transducer()
    for w in [(), (CC,), (CC, DC), (CC, CC, CC), (DD, CC, CC, CC)]:
        assert machine.strategy_at(w) == table.strategy_at(w)
    assert agree_to_depth(table, grim, pd_stage.moves, 3)
    assert not agree_to_depth(DepthTable(1, {(): CC}, CC, pd_stage.moves), grim, pd_stage.moves, 2)


# equilibrium checks


def test_all_defect_is_an_equilibrium_for_every_discount(pd, pd_stage):
    game = iterate_game(pd_stage, depth=5)
    always_d = all_constant(pd_stage, DD)
    for delta in (0.1, 0.5, 0.9):
        assert game.gfp_membership_exact(always_d, _k(pd, delta)).holds
        assert game.phi_check(always_d, _k(pd, delta)).holds


def test_grim_trigger_is_an_equilibrium_when_patient(pd, pd_stage):
    game = iterate_game(pd_stage, depth=6)
    verdict = game.gfp_membership_exact(_grim(pd_stage), _k(pd, 0.9))
    assert verdict.status is VerdictStatus.HOLDS
    assert verdict.to_dict()["depth_checked"] == "inf"
    bounded = game.phi_check(_grim(pd_stage), _k(pd, 0.9))
    assert bounded.holds and bounded.depth_checked == 6


@pytest.mark.parametrize("delta", [0.1, 0.3])
def test_grim_trigger_fails_when_impatient(pd, pd_stage, delta):
    game = iterate_game(pd_stage)
    exact = game.gfp_membership_exact(_grim(pd_stage), _k(pd, delta))
    assert exact.fails
    assert exact.witness.history == ()
    assert exact.witness.deviation == DD
    for depth in (3, 8):
        bounded = game.phi_check(_grim(pd_stage), _k(pd, delta), depth)
        assert bounded.fails
        assert bounded.witness.history == () and bounded.witness.deviation == DD


def test_off_path_failures_are_found(pd, pd_stage):
    # defects forever, but a (C,C) history switches to unpunished cooperation
    machine = StrategyTransducer(
        ["on", "off"],
        "on",
        {"on": DD, "off": CC},
        {**{("on", y): "off" if y == CC else "on" for y in pd_stage.moves}, **{("off", y): "off" for y in pd_stage.moves}},
        pd_stage.moves,
    )
    game = iterate_game(pd_stage)
    assert play_stream(pd_stage, machine, 4) == (DD,) * 4
    exact = game.gfp_membership_exact(machine, _k(pd, 0.9))
    assert exact.fails and exact.witness.history == (CC,)
    bounded = game.phi_check(machine, _k(pd, 0.9), 2)
    assert bounded.fails and bounded.witness.history == (CC,)
    assert game.phi_check(machine, _k(pd, 0.9), 1).holds


def test_bounded_and_exact_checks_agree_on_random_machines(pd, pd_stage):
    rng = random.Random(42)
    game = iterate_game(pd_stage)
    checked = 0
    for _ in range(40):
        size = rng.randint(1, 3)
        machine = _random_machine(rng, pd_stage, size)
        k = _k(pd, rng.choice([0.3, 0.75, 0.9]))
        try:
            exact = game.gfp_membership_exact(machine, k)
        except NumericallyMarginal:
            continue
        bounded = game.phi_check(machine, k, len(machine.states) + 1, epsilon=1e-13)
        assert bounded.status is exact.status
        checked += 1
    assert checked > 20


def test_threaded_phi_check_matches_serial(pd, pd_stage):
    rng = random.Random(4)
    serial = iterate_game(pd_stage, threads=1)
    parallel = iterate_game(pd_stage, threads=3)
    for _ in range(10):
        machine = _random_machine(rng, pd_stage, 3)
        k = _k(pd, 0.75)
        assert serial.phi_check(machine, k, 4) == parallel.phi_check(machine, k, 4)


def test_exact_check_needs_an_affine_invariant_stage_and_discounting(pd, pd_stage):
    unflagged = CoutilityFreeGame(replace(pd_stage.game, affine_invariant=False))
    with pytest.raises(NotAffineInvariant):
        iterate_game(unflagged).gfp_membership_exact(_grim(unflagged), _k(pd, 0.9))
    horizon = UtilityFunctional.finite_horizon(pd.stage_payoff(), 5)
    with pytest.raises(UnsupportedUtility):
        iterate_game(pd_stage).gfp_membership_exact(_grim(pd_stage), horizon)


def test_near_threshold_discount_is_marginal(pd, pd_stage):
    with pytest.raises(NumericallyMarginal):
        iterate_game(pd_stage).gfp_membership_exact(_grim(pd_stage), _k(pd, 0.5 - 1e-10))


def test_discount_threshold_brackets_one_half(pd, pd_stage):
    low, high = iterate_game(pd_stage).discount_threshold(_grim(pd_stage), pd.stage_payoff(), 0.1, 0.9)
    assert low <= 0.5 <= high
    assert high - low <= 1e-3


def test_truncated_horizons_are_flagged(pd, pd_stage):
    game = iterate_game(pd_stage, max_horizon=5)
    with pytest.warns(ApproximateUtilityWarning):
        verdict = game.phi_check(_grim(pd_stage), _k(pd, 0.9), 2)
    assert verdict.approximate


def test_mean_payoff_failures_are_unknown(pd, pd_stage):
    k = UtilityFunctional.mean_payoff_approx(pd.stage_payoff(), 3)
    verdict = iterate_game(pd_stage).phi_check(all_constant(pd_stage, CC), k, 2)
    assert verdict.status is VerdictStatus.UNKNOWN
    assert verdict.approximate and verdict.witness.history == ()


def test_stage_without_moves_cannot_be_iterated():
    empty = CoutilityFreeGame(constant_equilibrium_game(FinSet(), []))
    with pytest.raises(EmptyMoveSet):
        iterate_game(empty)


def test_single_player_decisions_iterate():
    stage = CoutilityFreeGame(argmax_decision(FinSet(["work", "rest"]), REALS))
    k = UtilityFunctional.discounted({"work": (2.0,), "rest": (1.0,)}, 0.8)
    game = iterate_game(stage, depth=4)
    assert game.gfp_membership_exact(all_constant(stage, "work"), k).holds
    assert game.phi_check(all_constant(stage, "rest"), k).fails


def test_permissive_stages_accept_every_strategy():
    moves = FinSet(["a", "b"])
    stage = CoutilityFreeGame(constant_equilibrium_game(moves, ["a", "b"], REALS))
    game = iterate_game(stage)
    rng = random.Random(12)
    for _ in range(15):
        machine = _random_machine(rng, stage, rng.randint(1, 4))
        k = UtilityFunctional.discounted({"a": (1.0,), "b": (-2.0,)}, rng.choice([0.2, 0.6, 0.95]))
        for depth in range(1, 7):
            assert game.phi_check(machine, k, depth).holds


def test_empty_stage_equilibria_fail_at_the_root():
    moves = FinSet(["a", "b"])
    stage = CoutilityFreeGame(constant_equilibrium_game(moves, [], REALS))
    k = UtilityFunctional.discounted({"a": (1.0,), "b": (0.0,)}, 0.5)
    verdict = iterate_game(stage).phi_check(all_constant(stage, "a"), k, 4)
    assert verdict.status is VerdictStatus.FAILS
    assert verdict.depth_checked == 1
    assert verdict.witness.history == ()
    assert verdict.witness.deviation is None


def test_single_state_machine_holds_exactly_on_a_permissive_stage():
    moves = FinSet(["a", "b"])
    stage = CoutilityFreeGame(constant_equilibrium_game(moves, ["a", "b"], REALS))
    k = UtilityFunctional.discounted({"a": (0.0,), "b": (5.0,)}, 0.9)
    machine = StrategyTransducer(["only"], "only", {"only": "a"}, {("only", y): "only" for y in moves}, moves)
    verdict = iterate_game(stage).gfp_membership_exact(machine, k)
    assert verdict.status is VerdictStatus.HOLDS
    assert verdict.witness is None


# coalgebras and unfoldings


@pytest.fixture
def constant_stage():
    return CoutilityFreeGame(constant_equilibrium_game(FinSet(["a", "b"]), ["a"], REALS))


def test_unfoldings_commute_and_agree_across_traversals(constant_stage):
    rng = random.Random(17)
    for _ in range(10):
        c = _random_coalgebra(rng, constant_stage, rng.randint(1, 4))
        breadth = unfold_coalgebra(c, constant_stage, 5, "breadth")
        depth_first = unfold_coalgebra(c, constant_stage, 5, "depth")
        assert breadth.commutes(constant_stage.moves)
        for s in c.h.strategies:
            assert breadth.unf_sigma(s).table == depth_first.unf_sigma(s).table
        assert breadth.streams == depth_first.streams


def test_unfolding_preserves_play_to_depth_32(constant_stage):
    rng = random.Random(23)
    for _ in range(10):
        c = _random_coalgebra(rng, constant_stage, rng.randint(1, 5))
        for s in c.h.strategies:
            z = c.h.play(s)
            assert bisim_check(c.stream(z), stream(constant_stage, c.strategy(s)), 32)


def test_free_coalgebras_are_valid_morphisms():
    scores = FinSet([0, 1])
    stage = CoutilityFreeGame(constant_equilibrium_game(FinSet(["a", "b"]), ["a"], scores))
    rng = random.Random(31)
    for _ in range(5):
        strategies = FinSet(["s0", "s1"])
        now = {s: rng.choice(["a", "b"]) for s in strategies}
        later = {(s, y): rng.choice(["s0", "s1"]) for s in strategies for y in stage.moves}
        equilibrium = _admissible_descendants(stage.moves, {"a"})(now, later)
        c = FiniteCoalgebra.free(stage, strategies, now, later, equilibrium)
        assert c.validate(stage).passed
    greedy = FiniteCoalgebra.free(
        stage, FinSet(["s0"]), {"s0": "b"}, {("s0", "a"): "s0", ("s0", "b"): "s0"}, lambda k, s: True
    )
    result = greedy.validate(stage)
    assert not result.passed and result.condition == "equilibrium"


def test_transported_continuation_matches_direct_evaluation(constant_stage):
    rng = random.Random(5)
    c = _random_coalgebra(rng, constant_stage, 3)
    k = UtilityFunctional.discounted({"a": (1.0,), "b": (-2.0,)}, 0.7)
    unfolding = unfold_coalgebra(c, constant_stage, 12)
    k_hat = transported_continuation(c, k, 12)
    for z in c.h.moves:
        for y in constant_stage.moves:
            assert k_hat(y, z) == evaluate_prefix(k, (y,) + unfolding.unf_y(z)).value


def test_ehat_members_are_never_refuted(constant_stage):
    rng = random.Random(99)
    k = UtilityFunctional.discounted({"a": (1.0,), "b": (0.0,)}, 0.5)
    game = iterate_game(constant_stage)
    members = 0
    for _ in range(20):
        size = rng.randint(1, 4)
        strategies = FinSet(f"s{i}" for i in range(size))
        now = {s: rng.choice(["a", "a", "b"]) for s in strategies}
        later = {(s, y): rng.choice(strategies.elements) for s in strategies for y in constant_stage.moves}
        equilibrium = _admissible_descendants(constant_stage.moves, {"a"})(now, later)
        c = FiniteCoalgebra.free(constant_stage, strategies, now, later, equilibrium)
        for s in strategies:
            candidate = c.strategy(s)
            if ehat_membership(game, c, candidate, k, depth=6):
                members += 1
                for depth in range(1, 7):
                    assert not game.phi_check(candidate, k, depth).fails
    assert members > 0


def _alternating(stage):
    # s0 opens with a, s1 with b, and every move hands over to the other
    strategies = FinSet(["s0", "s1"])
    now = {"s0": "a", "s1": "b"}
    later = {(s, y): ("s1" if s == "s0" else "s0") for s in strategies for y in stage.moves}
    return FiniteCoalgebra.free(stage, strategies, now, later)


def test_alternating_coalgebra_unfolds_by_hand(constant_stage):
    c = _alternating(constant_stage)
    unfolding = unfold_coalgebra(c, constant_stage, 8)
    opening = {"s0": "a", "s1": "b"}
    other = {"s0": "b", "s1": "a"}
    for y in ("a", "b"):
        assert unfolding.unf_y((y, "s0")) == (y, "a", "b", "a", "b", "a", "b", "a")
        assert unfolding.unf_y((y, "s1")) == (y, "b", "a", "b", "a", "b", "a", "b")
    for s in ("s0", "s1"):
        table = unfolding.unf_sigma(s).table
        assert len(table) == 2 ** 8 - 1
        for w in histories(constant_stage.moves, 8):
            assert table[w] == (opening[s] if len(w) % 2 == 0 else other[s])
    assert unfolding.commutes(constant_stage.moves)


def test_depth_zero_unfolding_is_empty(constant_stage):
    c = _alternating(constant_stage)
    for order in ("breadth", "depth"):
        unfolding = unfold_coalgebra(c, constant_stage, 0, order)
        assert all(unfolding.unf_sigma(s).table == {} for s in c.h.strategies)
        assert all(prefix == () for prefix in unfolding.streams.values())
        assert unfolding.commutes(constant_stage.moves)


def _one_deviation(stage_moves, epsilon=1e-9):
    """E_H(k, s): at every strategy reachable from s, no single move beats the planned one under k."""

    def build(now, later):
        def equilibrium(k, s):
            for t in reachable_strategies(later, stage_moves, s):
                values = {y: k((y, later[(t, y)])) for y in stage_moves}
                if values[now[t]] < max(values.values()) - epsilon:
                    return False
            return True

        return equilibrium

    return build


def test_ehat_members_survive_a_discount_sensitive_stage():
    stage = CoutilityFreeGame(argmax_decision(FinSet(["a", "b"]), REALS))
    k = UtilityFunctional.discounted({"a": (1.0,), "b": (0.45,)}, 0.6)
    game = iterate_game(stage)
    tolerance = 1e-13
    rng = random.Random(2024)
    kept = members = 0
    for _ in range(50):
        size = rng.randint(1, 4)
        strategies = FinSet(f"s{i}" for i in range(size))
        now = {s: rng.choice(["a", "a", "b"]) for s in strategies}
        later = {(s, y): rng.choice(strategies.elements) for s in strategies for y in stage.moves}
        c = FiniteCoalgebra.free(stage, strategies, now, later, _one_deviation(stage.moves)(now, later))

        horizon = horizon_for(k, tolerance, game.max_horizon)
        k_hat = transported_continuation(c, k, horizon - 1)
        target = fg_object(stage, c.h)
        sample = Continuation(target.moves, {(y, z): pack(REALS, k_hat(y, z)) for (y, z) in target.moves})
        if not c.validate(stage, k_sample=[sample]).passed:
            continue
        kept += 1

        for s in strategies:
            candidate = c.strategy(s)
            assert bisim_check(c.stream(c.h.play(s)), stream(stage, candidate), 32)
            if ehat_membership(game, c, candidate, k, depth=32, epsilon=tolerance):
                members += 1
                assert not game.phi_check(candidate, k, 12, epsilon=tolerance).fails
    assert kept >= 40
    assert members > 0
