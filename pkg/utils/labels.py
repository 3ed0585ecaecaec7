# utils/labels.py
"""Text form of engine labels.

JSON keys are strings, while engine labels may be nested tuples (profiles,
composite strategies) or conditioned strategy tables. Encoding flattens
tuples with commas; decoding never parses text back into structure, it
looks the text up among the labels of a known carrier.
"""
from typing import Any, Dict, Hashable, Iterable

from engine.conditioning import ConditionedStrategy
from engine.errors import UnknownMove


def encode_label(label: Any) -> str:
    if isinstance(label, tuple):
        return ",".join(encode_label(part) for part in label)
    if isinstance(label, ConditionedStrategy):
        return "{" + ";".join(f"{encode_label(a)}->{encode_label(s)}" for a, s in label.entries) + "}"
    if label is None:
        return "none"
    return str(label)


def _compact(label: Any) -> str:
    if isinstance(label, tuple):
        return "".join(_compact(part) for part in label)
    return encode_label(label)


class LabelCodec:
    """Decodes text against the labels of one carrier.

    Both the comma form ("C,C") and, where unambiguous, the compact form
    ("CC") of a tuple label are accepted.
    """

    def __init__(self, labels: Iterable[Hashable], what: str = "label"):
        self.what = what
        self._exact: Dict[str, Hashable] = {}
        compact: Dict[str, list] = {}
        for label in labels:
            self._exact[encode_label(label)] = label
            compact.setdefault(_compact(label), []).append(label)
        self._compact = {text: found[0] for text, found in compact.items() if len(found) == 1}

    def decode(self, text: str) -> Hashable:
        if text in self._exact:
            return self._exact[text]
        if text in self._compact:
            return self._compact[text]
        raise UnknownMove(f"Unknown {self.what} {text!r}")

    def __contains__(self, text: str) -> bool:
        return text in self._exact or text in self._compact
