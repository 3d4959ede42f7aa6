"""Clustered linear process equations and their explicit-state exploration.

An :class:`Lpe` is a list of :class:`Summand` objects over an opaque, hashable
state type.  Each summand is a guarded family of transitions indexed by a
finite summation domain; :func:`enabled` evaluates all of them in a state and
:func:`explore` materializes the reachable part as an :class:`Lts`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, NamedTuple, Optional

VISIBLE = "visible"
TAU_VISIBLE = "tau_visible"
INT = "int"
SILENT = "tau"

#: Reserved hide-set entry selecting every Int label.
ALL_INT = "*int*"


class ActionLabel(NamedTuple):
    """A classified action label.

    ``kind`` is one of ``visible``, ``tau_visible``, ``int`` or ``tau`` (the
    latter only appears after hiding).  Int labels carry no parameters.
    """

    kind: str
    name: str
    params: tuple = ()

    def __str__(self) -> str:
        return format_label(self)


TAU = ActionLabel(SILENT, "tau", ())


def visible(name: str, *params) -> ActionLabel:
    return ActionLabel(VISIBLE, name, tuple(params))


def tau_visible(name: str, *params) -> ActionLabel:
    return ActionLabel(TAU_VISIBLE, name, tuple(params))


def internal(name: str) -> ActionLabel:
    return ActionLabel(INT, name, ())


def format_param(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return f"p{value}"
    return str(value)


def format_label(label: ActionLabel) -> str:
    if label.kind in (INT, SILENT) or not label.params:
        return label.name
    return f"{label.name}({','.join(format_param(v) for v in label.params)})"


class LpeError(Exception):
    """Base class for exploration errors."""


class StateLimitExceeded(LpeError):
    def __init__(self, limit: int):
        super().__init__(f"more than {limit} reachable states; raise the state limit")
        self.limit = limit


class MalformedState(LpeError, ValueError):
    def __init__(self, field_name: str, detail: str):
        super().__init__(f"malformed state: {field_name}: {detail}")
        self.field = field_name


@dataclass(frozen=True)
class Summand:
    """One guarded summand ``sum e:domain(d). guard(d,e) -> label(d,e) . X(next(d,e))``."""

    id: str
    guard: Callable[[Any, Any], bool]
    label: Callable[[Any, Any], ActionLabel]
    next: Callable[[Any, Any], Any]
    domain: Callable[[Any], Iterable[Any]]


@dataclass(frozen=True)
class Lpe:
    initial: Hashable
    summands: tuple
    name: str = "lpe"
    # Raises MalformedState for states that do not belong to this model.
    validate: Optional[Callable[[Any], None]] = field(default=None, compare=False)
    # Optional canonical text encoding, used for reporting and export.
    encode: Callable[[Any], str] = field(default=repr, compare=False)

    def summand(self, summand_id: str) -> Summand:
        for s in self.summands:
            if s.id == summand_id:
                return s
        raise KeyError(summand_id)

    def without(self, *summand_ids: str, name: Optional[str] = None) -> "Lpe":
        missing = set(summand_ids) - {s.id for s in self.summands}
        if missing:
            raise KeyError(sorted(missing))
        kept = tuple(s for s in self.summands if s.id not in summand_ids)
        return Lpe(self.initial, kept, name or self.name, self.validate, self.encode)

    def replacing(self, *replacements: Summand, name: Optional[str] = None) -> "Lpe":
        by_id = {s.id: s for s in replacements}
        unknown = set(by_id) - {s.id for s in self.summands}
        if unknown:
            raise KeyError(sorted(unknown))
        summands = tuple(by_id.get(s.id, s) for s in self.summands)
        return Lpe(self.initial, summands, name or self.name, self.validate, self.encode)


def _successors(lpe: Lpe, d) -> list:
    seen = set()
    out = []
    for s in lpe.summands:
        for e in s.domain(d):
            if s.guard(d, e):
                pair = (s.label(d, e), s.next(d, e))
                if pair not in seen:
                    seen.add(pair)
                    out.append(pair)
    return out


def enabled(lpe: Lpe, d) -> set:
    """Return the set of ``(label, successor)`` pairs enabled in ``d``."""
    if lpe.validate is not None:
        lpe.validate(d)
    return set(_successors(lpe, d))


def enabled_by_summand(lpe: Lpe, d) -> list:
    """Like :func:`enabled` but keeps the summand id and summation value."""
    if lpe.validate is not None:
        lpe.validate(d)
    return [
        (s.id, e, s.label(d, e), s.next(d, e))
        for s in lpe.summands
        for e in s.domain(d)
        if s.guard(d, e)
    ]


class Lts:
    """A finite LTS with states indexed densely from 0 in discovery order."""

    def __init__(self, states: list, initial: int, transitions: list):
        self.states = states
        self.initial = initial
        self.transitions = transitions
        self.index = {s: i for i, s in enumerate(states)}
        self.out: list[list] = [[] for _ in states]
        for src, label, dst in transitions:
            self.out[src].append((label, dst))

    def __len__(self) -> int:
        return len(self.states)

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def num_transitions(self) -> int:
        return len(self.transitions)

    def labels(self) -> set:
        return {label for _, label, _ in self.transitions}

    def transition_set(self) -> set:
        """Transitions by state value, independent of state numbering."""
        st = self.states
        return {(st[a], label, st[b]) for a, label, b in self.transitions}

    def __repr__(self) -> str:
        return f"Lts(states={self.num_states}, transitions={self.num_transitions})"


def explore(lpe: Lpe, state_limit: int = 5_000_000) -> Lts:
    """Breadth-first construction of the reachable LTS of ``lpe``."""
    if state_limit < 1:
        raise ValueError("state_limit must be positive")
    if lpe.validate is not None:
        lpe.validate(lpe.initial)
    states = [lpe.initial]
    index = {lpe.initial: 0}
    transitions = []
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for label, nxt in _successors(lpe, states[i]):
            j = index.get(nxt)
            if j is None:
                if len(states) >= state_limit:
                    raise StateLimitExceeded(state_limit)
                j = len(states)
                index[nxt] = j
                states.append(nxt)
                queue.append(j)
            transitions.append((i, label, j))
    return Lts(states, 0, transitions)


@dataclass(frozen=True)
class InvariantVerdict:
    holds: bool
    state: Any = None
    label: Optional[ActionLabel] = None
    successor: Any = None
    states_checked: int = 0

    def __bool__(self) -> bool:
        return self.holds


def check_invariant(lpe: Lpe, pred: Callable[[Any], bool], state_limit: int = 5_000_000) -> InvariantVerdict:
    """Check ``pred(d) and d -l-> d2  implies  pred(d2)`` over all reachable transitions.

    The first violation in breadth-first order is returned.  A violation at the
    initial state is reported with ``label`` and ``successor`` set to ``None``.
    """
    if state_limit < 1:
        raise ValueError("state_limit must be positive")
    d0 = lpe.initial
    if not pred(d0):
        return InvariantVerdict(False, d0, None, None, 1)
    seen = {d0}
    queue = deque([d0])
    while queue:
        d = queue.popleft()
        for label, nxt in _successors(lpe, d):
            if not pred(nxt):
                return InvariantVerdict(False, d, label, nxt, len(seen))
            if nxt not in seen:
                if len(seen) >= state_limit:
                    raise StateLimitExceeded(state_limit)
                seen.add(nxt)
                queue.append(nxt)
    return InvariantVerdict(True, states_checked=len(seen))
