# utils/reporting.py
"""Machine-readable reports and the short coloured summary printed next to them."""
import json
import sys
from pathlib import Path
from typing import Any, Optional, TextIO

from colorama import Fore, Style
from colorama import init as colorama_init

STATUS_COLOURS = {
    "Holds": Fore.GREEN,
    "Fails": Fore.RED,
    "Unknown": Fore.YELLOW,
    "passed": Fore.GREEN,
    "failed": Fore.RED,
    "error": Fore.RED,
}


def canonical_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False)


def write_report(report: dict, output: Optional[Path] = None) -> None:
    payload = canonical_json(report)
    if output is None:
        sys.stdout.write(payload + "\n")
        return
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(payload + "\n", encoding="utf-8")


def _headline(report: dict) -> str:
    if report.get("error"):
        return "error"
    result = report.get("result") or {}
    if "verdict" in result:
        return result["verdict"]["status"]
    if "passed" in result:
        return "passed" if result["passed"] else "failed"
    if "equal" in result:
        return "passed" if result["equal"] else "failed"
    return ""


def print_summary(report: dict, stream: TextIO = None) -> None:
    stream = sys.stderr if stream is None else stream
    colorama_init()
    headline = _headline(report)
    colour = STATUS_COLOURS.get(headline, "")
    line = f"{report['command']}: {colour}{headline or 'done'}{Style.RESET_ALL}"
    stream.write(line + "\n")
    if report.get("error"):
        error = report["error"]
        stream.write(f"  {error['kind']}: {error['message']}\n")
        return
    for key, value in _summary_items(report.get("result") or {}):
        stream.write(f"  {key}: {value}\n")
    run = report.get("run") or {}
    if "elapsed_seconds" in run:
        stream.write(f"  {Style.DIM}elapsed {run['elapsed_seconds']:.3f}s{Style.RESET_ALL}\n")


def _summary_items(result: dict):
    verdict = result.get("verdict")
    if verdict:
        yield "depth", verdict["depth_checked"]
        if verdict["witness"]:
            yield "witness history", " ".join(verdict["witness"]["history"]) or "(empty)"
            yield "deviation", verdict["witness"]["deviation"]
        if verdict["approximate"]:
            yield "note", "approximate utility"
    for key in ("equilibria", "condition", "sigma", "index", "commutes", "moves", "strategies"):
        value: Any = result.get(key)
        if value is not None:
            yield key, value
