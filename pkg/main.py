# main.py
"""Command-line analyses over open games.

    python main.py check-nash pd.json
    python main.py iterate-check pd.json grim.json --delta 0.9 --mode exact

Every run writes a JSON report (to --output or stdout) and a short summary
to stderr. Exit code 0 means the analysis ran, whatever its verdict; 1 is
an input error; 2 is an internal error.
"""
import argparse
import logging
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, List, Optional

from config import configure_logging, settings
from engine.carriers import FinSet
from engine.conditioning import condition
from engine.errors import OpenGameError, ParseError, SchemaError
from engine.iteration import bisim_check, iterate_game, play_stream, stream, unfold_coalgebra
from engine.library import bimatrix_game
from engine.morphisms import check_morphism, random_continuations
from engine.open_game import OpenGame, compose, equilibrium_set, tensor
from engine.two_cells import fg_object
from engine.utility import UtilityFunctional
from utils.documents import (
    HISTORY_SEPARATOR,
    BimatrixDocument,
    CoalgebraDocument,
    MorphismDocument,
    bimatrix_from_document,
    coalgebra_from_document,
    continuation_from_document,
    game_to_document,
    load_game,
    load_json,
    load_stage,
    load_strategy,
    load_utility,
    morphism_from_document,
    parse,
)
from utils.labels import LabelCodec, encode_label
from utils.reporting import print_summary, write_report

logger = logging.getLogger("main")


class RequestParser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(f"{self.prog}: {message}")


def build_parser() -> RequestParser:
    parser = RequestParser(prog="open-games", description="Equilibrium analyses for compositional open games.")
    parser.add_argument("command", choices=sorted(HANDLERS))
    parser.add_argument("inputs", nargs="+", type=Path)
    parser.add_argument("--depth", type=int, default=settings.DEFAULT_DEPTH)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--epsilon", type=float, default=settings.EPSILON)
    parser.add_argument("--mode", choices=["exact", "bounded"], default="bounded")
    parser.add_argument("--threads", type=int, default=settings.THREADS)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--output", type=Path)
    parser.add_argument("--continuation", type=Path, help="JSON continuation {move: value}")
    parser.add_argument("--state", help="state label for check-nash and equilibria of built games")
    parser.add_argument("--index", help="comma-separated index labels for condition")
    parser.add_argument("--utility", type=Path, help="JSON utility functional for iterate-check")
    parser.add_argument("--samples", type=int, help="check morphisms against this many seeded continuations")
    parser.add_argument("--progress", action="store_true", help="show a progress bar while checking morphisms")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL)
    return parser


def validate_request(args: argparse.Namespace) -> None:
    if args.depth < 0:
        raise SchemaError(f"--depth must be non-negative, got {args.depth}")
    if args.delta is not None and not 0 <= args.delta < 1:
        raise SchemaError(f"--delta must lie in [0, 1), got {args.delta}")
    if not args.epsilon > 0:
        raise SchemaError(f"--epsilon must be positive, got {args.epsilon}")
    if args.threads < 1:
        raise SchemaError(f"--threads must be at least 1, got {args.threads}")
    if args.samples is not None and args.samples < 1:
        raise SchemaError(f"--samples must be at least 1, got {args.samples}")
    expected = INPUT_COUNTS[args.command]
    if len(args.inputs) != expected:
        raise SchemaError(f"{args.command} takes {expected} input file(s), got {len(args.inputs)}")


# helpers


def _inputs(args, count: int) -> List[Path]:
    return list(args.inputs[:count])


def _equilibria(game: OpenGame, args) -> Optional[dict]:
    if args.continuation is None:
        return None
    k = continuation_from_document(load_json(args.continuation), game.moves, game.utilities, str(args.continuation))
    x = LabelCodec(game.states, "state").decode(args.state) if args.state else next(iter(game.states))
    return {"state": encode_label(x), "equilibria": [encode_label(s) for s in equilibrium_set(game, x, k)]}


def _game_result(game: OpenGame, args) -> dict:
    result = {"game": game_to_document(game)}
    found = _equilibria(game, args)
    if found:
        result.update(found)
    return result


# command handlers


def run_check_nash(args) -> dict:
    (path,) = _inputs(args, 1)
    payload = load_json(path)
    if isinstance(payload, dict) and "moves1" in payload:
        m = bimatrix_from_document(parse(BimatrixDocument, payload, str(path)))
        game = bimatrix_game(m, args.epsilon)
        if args.continuation is None:
            k, x = m.continuation(), next(iter(game.states))
            return {
                "state": encode_label(x),
                "equilibria": [encode_label(s) for s in equilibrium_set(game, x, k)],
            }
        return _equilibria(game, args)
    game = load_game(path)
    if args.continuation is None:
        raise SchemaError("check-nash on an open game needs --continuation")
    return _equilibria(game, args)


def run_compose(args) -> dict:
    g, h = (load_game(p) for p in _inputs(args, 2))
    return _game_result(compose(g, h), args)


def run_tensor(args) -> dict:
    g, h = (load_game(p) for p in _inputs(args, 2))
    return _game_result(tensor(g, h), args)


def run_condition(args) -> dict:
    (path,) = _inputs(args, 1)
    if not args.index:
        raise SchemaError("condition needs --index")
    index = FinSet(label.strip() for label in args.index.split(","))
    return _game_result(condition(index, load_game(path)), args)


def run_check_morphism(args) -> dict:
    alpha_path, source_path, target_path = _inputs(args, 3)
    source, target = load_game(source_path), load_game(target_path)
    alpha = morphism_from_document(parse(MorphismDocument, load_json(alpha_path), str(alpha_path)), source, target)
    k_sample = None
    if args.samples:
        k_sample = random_continuations(target.moves, target.utilities.samples(), args.samples, args.seed)
    result = check_morphism(
        alpha, source, target, k_sample=k_sample, threads=args.threads, progress=args.progress
    )
    return {
        "passed": result.passed,
        "condition": result.condition,
        "sigma": None if result.sigma is None else encode_label(result.sigma),
        "state": None if result.state is None else encode_label(result.state),
        "continuation": None
        if result.continuation is None
        else {encode_label(y): encode_label(r) for y, r in result.continuation.items()},
        "sampled": result.sampled,
        "continuations_checked": result.continuations_checked,
    }


def run_iterate_check(args) -> dict:
    stage_path, strategy_path = _inputs(args, 2)
    stage, bimatrix = load_stage(stage_path, args.epsilon)
    strategy = load_strategy(strategy_path, stage)
    if args.utility is not None:
        k = load_utility(args.utility, stage)
    elif bimatrix is not None and args.delta is not None:
        k = UtilityFunctional.from_bimatrix(bimatrix, args.delta)
    else:
        raise SchemaError("iterate-check needs --utility, or --delta with a bimatrix stage")
    game = iterate_game(stage, depth=args.depth, epsilon=args.epsilon, threads=args.threads)
    if args.mode == "exact":
        verdict = game.gfp_membership_exact(strategy, k, args.epsilon)
    else:
        verdict = game.phi_check(strategy, k, max(args.depth, 1), args.epsilon)
    logger.info("%s: %s", args.command, verdict.status.value)
    return {
        "mode": args.mode,
        "utility": k.kind.value,
        "verdict": verdict.to_dict(encode_label),
        "self_play": [encode_label(y) for y in play_stream(stage, strategy, args.depth)],
    }


def run_unfold(args) -> dict:
    stage_path, coalgebra_path = _inputs(args, 2)
    stage, _ = load_stage(stage_path, args.epsilon)
    c = coalgebra_from_document(parse(CoalgebraDocument, load_json(coalgebra_path), str(coalgebra_path)), stage)
    breadth = unfold_coalgebra(c, stage, args.depth, "breadth")
    depth_first = unfold_coalgebra(c, stage, args.depth, "depth")
    result = {
        "strategies": {
            encode_label(s): {
                HISTORY_SEPARATOR.join(encode_label(y) for y in w): encode_label(sigma)
                for w, sigma in table.table.items()
            }
            for s, table in breadth.tables.items()
        },
        "streams": {encode_label(z): [encode_label(y) for y in prefix] for z, prefix in breadth.streams.items()},
        "commutes": breadth.commutes(stage.moves),
        "orders_agree": all(
            breadth.tables[s].table == depth_first.tables[s].table for s in c.h.strategies
        )
        and breadth.streams == depth_first.streams,
    }
    if args.samples:
        target = fg_object(stage, c.h)
        k_sample = random_continuations(target.moves, stage.utilities.samples(), args.samples, args.seed)
        result["valid"] = c.validate(
            stage, k_sample=k_sample, threads=args.threads, progress=args.progress
        ).passed
    return result


def run_bisim(args) -> dict:
    stage_path, first_path, second_path = _inputs(args, 3)
    stage, _ = load_stage(stage_path, args.epsilon)
    first, second = load_strategy(first_path, stage), load_strategy(second_path, stage)
    outcome = bisim_check(stream(stage, first), stream(stage, second), args.depth)
    return {
        "equal": outcome.equal,
        "index": outcome.index,
        "depth": outcome.depth,
        "first": [encode_label(y) for y in play_stream(stage, first, args.depth)],
        "second": [encode_label(y) for y in play_stream(stage, second, args.depth)],
    }


HANDLERS: Dict[str, Callable[[argparse.Namespace], dict]] = {
    "check-nash": run_check_nash,
    "compose": run_compose,
    "tensor": run_tensor,
    "condition": run_condition,
    "check-morphism": run_check_morphism,
    "iterate-check": run_iterate_check,
    "unfold": run_unfold,
    "bisim": run_bisim,
}

INPUT_COUNTS = {
    "check-nash": 1,
    "compose": 2,
    "tensor": 2,
    "condition": 1,
    "check-morphism": 3,
    "iterate-check": 2,
    "unfold": 2,
    "bisim": 3,
}


def main(argv: Optional[List[str]] = None) -> int:
    started = time.perf_counter()
    report = {
        "command": argv[0] if argv else None,
        "inputs": [],
        "parameters": {},
        "result": None,
        "error": None,
    }
    args = None
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level)
        report["command"] = args.command
        report["inputs"] = [str(p) for p in args.inputs]
        report["parameters"] = {
            "depth": args.depth,
            "delta": args.delta,
            "epsilon": args.epsilon,
            "mode": args.mode,
            "threads": args.threads,
            "seed": args.seed,
        }
        validate_request(args)
        report["result"] = HANDLERS[args.command](args)
        code = 0
    except OpenGameError as exc:
        report["error"] = {"kind": exc.kind, "message": str(exc)}
        code = 1
    except Exception as exc:
        logger.exception("Internal error")
        report["error"] = {"kind": "InternalError", "message": f"{type(exc).__name__}: {exc}"}
        code = 2
    report["run"] = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "elapsed_seconds": round(time.perf_counter() - started, 6),
    }
    write_report(report, args.output if args is not None else None)
    print_summary(report)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
