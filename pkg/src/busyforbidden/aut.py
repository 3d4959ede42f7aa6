"""Aldebaran (``.aut``) export and a small line parser for reading it back."""

from __future__ import annotations

import os
import re
from typing import NamedTuple, Union

from .lpe import format_label

_HEADER_RE = re.compile(r"^des \((\d+), (\d+), (\d+)\)$")
_LINE_RE = re.compile(r'^\((\d+),"([^"]*)",(\d+)\)$')


class AutError(ValueError):
    pass


class AutGraph(NamedTuple):
    initial: int
    num_states: int
    transitions: list  # (src, label text, dst)


def _label_text(label) -> str:
    return label if isinstance(label, str) else format_label(label)


def aut_lines(lts) -> list:
    """The lines of the ``.aut`` rendering of ``lts`` (an ``Lts`` or ``HiddenLts``)."""
    transitions = [(src, _label_text(label), dst) for src, outs in enumerate(lts.out) for label, dst in outs]
    lines = [f"des ({lts.initial}, {len(transitions)}, {len(lts.states)})"]
    for src, text, dst in transitions:
        if '"' in text:
            raise AutError(f"label {text!r} contains a double quote")
        lines.append(f'({src},"{text}",{dst})')
    return lines


def export_aut(lts, path: Union[str, os.PathLike]) -> int:
    """Write ``lts`` to ``path``; returns the number of transitions written."""
    lines = aut_lines(lts)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return len(lines) - 1


def parse_aut(text: str) -> AutGraph:
    lines = text.splitlines()
    if not lines:
        raise AutError("empty input")
    m = _HEADER_RE.match(lines[0])
    if not m:
        raise AutError(f"bad header: {lines[0]!r}")
    initial, count, states = map(int, m.groups())
    transitions = []
    for no, line in enumerate(lines[1:], 2):
        t = _LINE_RE.match(line)
        if not t:
            raise AutError(f"line {no}: bad transition {line!r}")
        src, text, dst = int(t.group(1)), t.group(2), int(t.group(3))
        if not (0 <= src < states and 0 <= dst < states):
            raise AutError(f"line {no}: state index out of range")
        transitions.append((src, text, dst))
    if len(transitions) != count:
        raise AutError(f"header announces {count} transitions, found {len(transitions)}")
    if not 0 <= initial < max(states, 1):
        raise AutError("initial state out of range")
    return AutGraph(initial, states, transitions)


def read_aut(path: Union[str, os.PathLike]) -> AutGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_aut(fh.read())
