"""The three flag/mutex invariants of the implementation and flag derivation."""

from __future__ import annotations

from typing import Callable, NamedTuple

from .states import ImplState, bit, full_mask

# Substates fenced off by the mutex (OE2 still holds it; OE1 has released it).
MUTEX_KINDS = frozenset(
    {"SAF", "SAF_store", "SAF_undo", "LOS1", "LOS2", "Exclusive", "LE", "OE2"}
)
BUSY_KINDS = frozenset({"LOE", "Shared", "ES1", "ES4", "LS2"})


def in_mutex_set(sub) -> bool:
    return sub.kind in MUTEX_KINDS


def in_busy_set(sub) -> bool:
    return sub.kind in BUSY_KINDS


def forbids(sub, n: int) -> int:
    """Bitmask of threads whose forbidden flag is implied by one thread being in ``sub``.

    LOS and Exclusive forbid everybody, ``LE_U`` and ``SAF_U`` forbid ``U``, and
    ``SAF_store(px, U)``/``SAF_undo(px, U)`` forbid ``U`` plus ``px``.
    """
    k = sub.kind
    if k in ("LOS1", "LOS2", "Exclusive"):
        return full_mask(n)
    if k in ("LE", "SAF"):
        return sub.mask
    if k in ("SAF_store", "SAF_undo"):
        return sub.mask | bit(sub.px)
    return 0


class InconsistentSubstates(ValueError):
    pass


class Flags(NamedTuple):
    busy: int
    forbidden: int
    mtx: bool


def derive_flags(subs) -> Flags:
    """Compute the unique ``(busy, forbidden, mtx)`` implied by the substates."""
    n = len(subs)
    holders = [p for p, s in enumerate(subs, 1) if s.kind in MUTEX_KINDS]
    if len(holders) > 1:
        raise InconsistentSubstates(f"threads {holders} are simultaneously inside the mutex")
    busy = 0
    forbidden = 0
    for p, s in enumerate(subs, 1):
        if s.kind in BUSY_KINDS:
            busy |= bit(p)
        forbidden |= forbids(s, n)
    return Flags(busy, forbidden, bool(holders))


def mutex_invariant(d: ImplState) -> bool:
    inside = sum(1 for s in d.subs if s.kind in MUTEX_KINDS)
    return inside <= 1 and (inside == 1) == d.mtx


def busy_invariant(d: ImplState) -> bool:
    return all((s.kind in BUSY_KINDS) == d.is_busy(p) for p, s in enumerate(d.subs, 1))


def forbidden_invariant(d: ImplState) -> bool:
    n = len(d.subs)
    implied = 0
    for s in d.subs:
        implied |= forbids(s, n)
    return implied == d.forbidden


def all_invariants(d: ImplState) -> bool:
    return mutex_invariant(d) and busy_invariant(d) and forbidden_invariant(d)


_PREDICATES = {
    "mutex": mutex_invariant,
    "busy": busy_invariant,
    "forbidden": forbidden_invariant,
    "all": all_invariants,
}


def invariant_pred(which: str) -> Callable[[ImplState], bool]:
    try:
        return _PREDICATES[which]
    except KeyError:
        raise ValueError(f"unknown invariant {which!r}; expected one of {sorted(_PREDICATES)}") from None


def flags_match(d: ImplState) -> bool:
    """True when the stored flags equal the ones derived from the substates."""
    try:
        return derive_flags(d.subs) == (d.busy, d.forbidden, d.mtx)
    except InconsistentSubstates:
        return False
