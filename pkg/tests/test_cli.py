import json

import pytest

from main import main
from utils.documents import HISTORY_SEPARATOR

PD = {
    "moves1": ["C", "D"],
    "moves2": ["C", "D"],
    "payoff": {"C,C": [3, 3], "C,D": [0, 5], "D,C": [5, 0], "D,D": [1, 1]},
}

GRIM = {"builtin": "grim_trigger", "params": {"cooperate": "C,C", "punish": "D,D"}}

TIT_FOR_TAT = {"builtin": "tit_for_tat", "params": {"cooperate": "CC"}}

# one player choosing a or b, scored 0 (worst) or 1 (best)
CHOICE = {
    "name": "choice",
    "dom": {"X": ["x"], "S": ["s"]},
    "cod": {"Y": ["a", "b"], "R": ["0", "1"]},
    "strategies": ["a", "b"],
    "play": {"a": {"x": "a"}, "b": {"x": "b"}},
    "coutility": {"a": {"x": {"0": "s", "1": "s"}}, "b": {"x": {"0": "s", "1": "s"}}},
    "equilibrium": "argmax",
}

RELAY = {
    "name": "relay",
    "dom": {"X": ["a", "b"], "S": ["0", "1"]},
    "cod": {"Y": ["a", "b"], "R": ["0", "1"]},
    "strategies": ["id"],
    "play": {"id": {"a": "a", "b": "b"}},
    "coutility": {"id": {"a": {"0": "0", "1": "1"}, "b": {"0": "0", "1": "1"}}},
    "equilibrium": "always",
}


@pytest.fixture
def files(tmp_path):
    def write(name, payload):
        path = tmp_path / name
        path.write_text(payload if isinstance(payload, str) else json.dumps(payload), encoding="utf-8")
        return str(path)

    return write


def _run(capsys, argv):
    code = main(argv)
    report = json.loads(capsys.readouterr().out)
    return code, report


def test_check_nash_on_a_bimatrix(capsys, files):
    code, report = _run(capsys, ["check-nash", files("pd.json", PD)])
    assert code == 0
    assert report["error"] is None
    assert report["result"]["equilibria"] == ["D,D"]


def test_check_nash_on_a_game_document(capsys, files):
    game = files("choice.json", CHOICE)
    k = files("k.json", {"a": "1", "b": "0"})
    code, report = _run(capsys, ["check-nash", game, "--continuation", k])
    assert code == 0
    assert report["result"] == {"state": "x", "equilibria": ["a"]}


def test_check_nash_on_a_game_needs_a_continuation(capsys, files):
    code, report = _run(capsys, ["check-nash", files("choice.json", CHOICE)])
    assert code == 1
    assert report["error"]["kind"] == "SchemaError"


def test_grim_trigger_holds_with_patient_players(capsys, files):
    argv = ["iterate-check", files("pd.json", PD), files("grim.json", GRIM), "--delta", "0.9", "--mode", "exact"]
    code, report = _run(capsys, argv)
    assert code == 0
    verdict = report["result"]["verdict"]
    assert verdict["status"] == "Holds"
    assert verdict["depth_checked"] == "inf"
    assert verdict["witness"] is None
    assert set(report["result"]["self_play"]) == {"C,C"}


def test_grim_trigger_fails_with_impatient_players(capsys, files):
    argv = ["iterate-check", files("pd.json", PD), files("grim.json", GRIM), "--delta", "0.1", "--depth", "4"]
    code, report = _run(capsys, argv)
    assert code == 0
    verdict = report["result"]["verdict"]
    assert verdict["status"] == "Fails"
    assert verdict["witness"] == {"history": [], "deviation": "D,D"}


def test_utility_file_replaces_delta(capsys, files):
    utility = files(
        "utility.json",
        {"kind": "discounted", "delta": 0.9, "stage_payoff": {"CC": [3, 3], "CD": [0, 5], "DC": [5, 0], "DD": [1, 1]}},
    )
    argv = ["iterate-check", files("pd.json", PD), files("grim.json", GRIM), "--utility", utility, "--mode", "exact"]
    code, report = _run(capsys, argv)
    assert code == 0
    assert report["result"]["utility"] == "discounted"
    assert report["result"]["verdict"]["status"] == "Holds"


def test_reports_are_deterministic_apart_from_the_run_block(files, tmp_path):
    pd, grim = files("pd.json", PD), files("grim.json", GRIM)
    reports = []
    for name in ("first.json", "second.json"):
        output = tmp_path / name
        assert main(["iterate-check", pd, grim, "--delta", "0.9", "--output", str(output)]) == 0
        report = json.loads(output.read_text(encoding="utf-8"))
        assert set(report["run"]) == {"timestamp", "elapsed_seconds"}
        del report["run"]
        reports.append(report)
    assert reports[0] == reports[1]


def test_malformed_json_reports_its_location(capsys, files):
    broken = files("broken.json", '{"moves1": ["C", "D"],\n  "moves2": [}')
    code, report = _run(capsys, ["check-nash", broken])
    assert code == 1
    assert report["error"]["kind"] == "ParseError"
    assert f"{broken}:2:" in report["error"]["message"]


@pytest.mark.parametrize(
    "argv, kind",
    [
        (["solve", "x.json"], "ParseError"),
        (["check-nash", "a.json", "b.json"], "SchemaError"),
        (["iterate-check", "pd.json", "grim.json", "--delta", "1.5"], "SchemaError"),
        (["check-nash", "missing.json"], "ParseError"),
    ],
)
def test_argument_errors_have_distinct_kinds(capsys, argv, kind):
    code, report = _run(capsys, argv)
    assert code == 1
    assert report["error"]["kind"] == kind


def test_input_errors_are_classified(capsys, files):
    pd = files("pd.json", PD)
    bad_payoff = files("bad.json", {**PD, "payoff": {**PD["payoff"], "X,D": [1, 1]}})
    _, report = _run(capsys, ["check-nash", bad_payoff])
    assert report["error"]["kind"] == "UnknownMove"

    extra = files("extra.json", {**PD, "players": 2})
    _, report = _run(capsys, ["check-nash", extra])
    assert report["error"]["kind"] == "SchemaError"

    bad_trigger = files("trigger.json", {"builtin": "grim_trigger", "params": {"cooperate": "CC", "punish": "EE"}})
    code, report = _run(capsys, ["iterate-check", pd, bad_trigger, "--delta", "0.5"])
    assert code == 1
    assert report["error"]["kind"] == "UnknownMove"


def test_tensor_and_compose_write_game_documents(capsys, files):
    choice, relay = files("choice.json", CHOICE), files("relay.json", RELAY)
    _, report = _run(capsys, ["tensor", choice, choice])
    game = report["result"]["game"]
    assert game["strategies"] == ["a,a", "a,b", "b,a", "b,b"]
    assert game["dom"]["X"] == ["x,x"]

    _, report = _run(capsys, ["compose", choice, relay])
    game = report["result"]["game"]
    assert game["strategies"] == ["a,id", "b,id"]
    assert game["play"]["b,id"] == {"x": "b"}


def test_condition_builds_strategy_tables(capsys, files):
    _, report = _run(capsys, ["condition", files("choice.json", CHOICE), "--index", "p, q"])
    game = report["result"]["game"]
    assert len(game["strategies"]) == 4
    assert game["dom"]["X"] == ["p,x", "q,x"]


def test_check_morphism_accepts_a_relabelling(capsys, files):
    choice = files("choice.json", CHOICE)
    swap = files("swap.json", {"alpha_Y": {"a": "b", "b": "a"}, "alpha_Sigma": {"a": "b", "b": "a"}})
    code, report = _run(capsys, ["check-morphism", swap, choice, choice])
    assert code == 0
    assert report["result"]["passed"] is True
    assert report["result"]["continuations_checked"] == 4

    collapse = files("collapse.json", {"alpha_Y": {"a": "a", "b": "a"}, "alpha_Sigma": {"a": "a", "b": "a"}})
    _, report = _run(capsys, ["check-morphism", collapse, choice, choice])
    assert report["result"]["passed"] is False
    assert report["result"]["condition"] == "equilibrium"


def test_bisim_of_grim_and_tit_for_tat(capsys, files):
    pd = files("pd.json", PD)
    argv = ["bisim", pd, files("grim.json", GRIM), files("tft.json", TIT_FOR_TAT), "--depth", "6"]
    code, report = _run(capsys, argv)
    assert code == 0
    assert report["result"]["equal"] is True
    assert report["result"]["first"] == ["C,C"] * 6


def test_unfold_of_a_defecting_coalgebra(capsys, files):
    coalgebra = {
        "strategies": ["s"],
        "now": {"s": "DD"},
        "later": {"s": {"CC": "s", "CD": "s", "DC": "s", "DD": "s"}},
    }
    argv = ["unfold", files("pd.json", PD), files("coalgebra.json", coalgebra), "--depth", "2", "--samples", "3"]
    code, report = _run(capsys, argv)
    assert code == 0
    result = report["result"]
    assert result["commutes"] is True
    assert result["orders_agree"] is True
    assert result["valid"] is True
    assert result["strategies"]["s"][""] == "D,D"
    assert result["strategies"]["s"]["C,C"] == "D,D"


@pytest.mark.parametrize("vector", [[3], [3, 3, 3]])
def test_utility_payoffs_must_match_the_stage(capsys, files, vector):
    payoff = {"CC": vector, "CD": [0, 5], "DC": [5, 0], "DD": [1, 1]}
    utility = files("utility.json", {"kind": "discounted", "delta": 0.9, "stage_payoff": payoff})
    code, report = _run(capsys, ["iterate-check", files("pd.json", PD), files("grim.json", GRIM), "--utility", utility])
    assert code == 1
    assert report["error"]["kind"] == "SchemaError"
    assert "stage_payoff.CC: expected 2 payoffs" in report["error"]["message"]


@pytest.mark.parametrize("value", ["NaN", "Infinity", "-Infinity"])
def test_bimatrix_payoffs_must_be_finite(capsys, files, value):
    text = json.dumps(PD).replace("[3, 3]", f"[{value}, 3]")
    code, report = _run(capsys, ["check-nash", files("pd.json", text)])
    assert code == 1
    assert report["error"]["kind"] == "SchemaError"
    assert "payoff.C,C" in report["error"]["message"]


def test_progress_bar_is_written_to_stderr(capsys, files):
    choice = files("choice.json", CHOICE)
    swap = files("swap.json", {"alpha_Y": {"a": "b", "b": "a"}, "alpha_Sigma": {"a": "b", "b": "a"}})
    assert main(["check-morphism", swap, choice, choice]) == 0
    assert "continuations:" not in capsys.readouterr().err

    assert main(["check-morphism", swap, choice, choice, "--progress"]) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)["result"]["passed"] is True
    assert "continuations:" in captured.err
    assert "4/4" in captured.err

    coalgebra = {"strategies": ["s"], "now": {"s": "DD"}, "later": {"s": {"CC": "s", "CD": "s", "DC": "s", "DD": "s"}}}
    stage, machine = files("pd.json", PD), files("coalgebra.json", coalgebra)
    argv = ["unfold", stage, machine, "--depth", "2", "--samples", "5", "--progress"]
    assert main(argv) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)["result"]["valid"] is True
    assert "5/5" in captured.err


def test_unfold_joins_histories_like_depth_table_files(capsys, files):
    coalgebra = {"strategies": ["s"], "now": {"s": "DD"}, "later": {"s": {"CC": "s", "CD": "s", "DC": "s", "DD": "s"}}}
    argv = ["unfold", files("pd.json", PD), files("coalgebra.json", coalgebra), "--depth", "3"]
    _, report = _run(capsys, argv)
    table = report["result"]["strategies"]["s"]
    assert len(table) == 1 + 4 + 16
    assert table[HISTORY_SEPARATOR.join(["C,C", "D,C"])] == "D,D"
