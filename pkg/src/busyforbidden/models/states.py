"""State types for the busy-forbidden models.

Threads are numbered ``1..N``.  Thread sets are bitmasks in which thread ``p``
owns bit ``p - 1``.
"""

from __future__ import annotations

import re
from typing import Iterator, NamedTuple

from ..lpe import MalformedState

# Substate kinds without parameters.
PLAIN_KINDS = (
    "Free", "ES1", "ES2", "ES3", "ES4", "LOE", "Shared", "LS1", "LS2", "EE",
    "LOS1", "LOS2", "Exclusive", "OE1", "OE2",
)
# Parameterized kinds: SAF carries U; SAF_store and SAF_undo carry (px, U); LE carries U.
SET_KINDS = ("SAF", "LE")
PAIR_KINDS = ("SAF_store", "SAF_undo")
KINDS = PLAIN_KINDS + SET_KINDS + PAIR_KINDS

SPEC_NODES = (
    "Free", "ES", "LOE", "Shared", "LS", "EE", "SAF", "LOS", "Exclusive", "LE", "OE",
)


def bit(p: int) -> int:
    return 1 << (p - 1)


def full_mask(n: int) -> int:
    return (1 << n) - 1


def members(mask: int) -> list:
    """Thread ids in ``mask`` in increasing order."""
    out = []
    p = 1
    while mask:
        if mask & 1:
            out.append(p)
        mask >>= 1
        p += 1
    return out


def mask_of(threads) -> int:
    m = 0
    for p in threads:
        m |= bit(p)
    return m


def fmt_set(mask: int) -> str:
    return "{" + ",".join(f"p{p}" for p in members(mask)) + "}"


class Substate(NamedTuple):
    """Protocol location of a single thread.

    ``px`` is 0 unless the kind is ``SAF_store`` or ``SAF_undo``; ``mask`` is 0
    unless the kind carries a thread set.
    """

    kind: str
    px: int = 0
    mask: int = 0

    def __str__(self) -> str:
        if self.kind in SET_KINDS:
            return f"{self.kind}{fmt_set(self.mask)}"
        if self.kind in PAIR_KINDS:
            return f"{self.kind}(p{self.px},{fmt_set(self.mask)})"
        return self.kind


FREE = Substate("Free")
ES1, ES2, ES3, ES4 = (Substate(k) for k in ("ES1", "ES2", "ES3", "ES4"))
LOE = Substate("LOE")
SHARED = Substate("Shared")
LS1, LS2 = Substate("LS1"), Substate("LS2")
EE = Substate("EE")
LOS1, LOS2 = Substate("LOS1"), Substate("LOS2")
EXCLUSIVE = Substate("Exclusive")
OE1, OE2 = Substate("OE1"), Substate("OE2")
SAF_EMPTY = Substate("SAF", 0, 0)


def saf(mask: int) -> Substate:
    return Substate("SAF", 0, mask)


def saf_store(px: int, mask: int) -> Substate:
    return Substate("SAF_store", px, mask)


def saf_undo(px: int, mask: int) -> Substate:
    return Substate("SAF_undo", px, mask)


def le(mask: int) -> Substate:
    return Substate("LE", 0, mask)


def all_substates(n: int) -> Iterator[Substate]:
    """Every substate for ``n`` threads, in a fixed order."""
    full = full_mask(n)
    for k in PLAIN_KINDS:
        yield Substate(k)
    for u in range(full):  # strict subsets
        yield saf(u)
    for kind in PAIR_KINDS:
        for px in range(1, n + 1):
            for u in range(full):
                yield Substate(kind, px, u)
    for u in range(1, full + 1):  # nonempty subsets
        yield le(u)


class ImplState(NamedTuple):
    """Implementation state: substates of threads 1..N, flag bitmasks and the mutex bit."""

    subs: tuple
    busy: int = 0
    forbidden: int = 0
    mtx: bool = False

    @property
    def n(self) -> int:
        return len(self.subs)

    def sub(self, p: int) -> Substate:
        return self.subs[p - 1]

    def is_busy(self, p: int) -> bool:
        return bool(self.busy & bit(p))

    def is_forbidden(self, p: int) -> bool:
        return bool(self.forbidden & bit(p))

    def busy_map(self) -> dict:
        return {p: self.is_busy(p) for p in range(1, self.n + 1)}

    def forbidden_map(self) -> dict:
        return {p: self.is_forbidden(p) for p in range(1, self.n + 1)}

    def __str__(self) -> str:
        return encode_impl(self)


def impl_initial(n: int) -> ImplState:
    return ImplState((FREE,) * n, 0, 0, False)


def spec_initial(n: int) -> tuple:
    return ("Free",) * n


def validate_impl(d) -> None:
    if not isinstance(d, ImplState):
        raise MalformedState("state", f"expected ImplState, got {type(d).__name__}")
    n = len(d.subs)
    if n < 1:
        raise MalformedState("subs", "no threads")
    full = full_mask(n)
    for p, s in enumerate(d.subs, start=1):
        where = f"subs[p{p}]"
        if not isinstance(s, Substate) or s.kind not in KINDS:
            raise MalformedState(where, f"unknown substate {s!r}")
        if s.kind in PLAIN_KINDS and (s.px or s.mask):
            raise MalformedState(where, f"{s.kind} takes no parameters")
        if s.kind in SET_KINDS or s.kind in PAIR_KINDS:
            if s.mask & ~full:
                raise MalformedState(where, "thread set mentions unknown threads")
        if s.kind in ("SAF",) + PAIR_KINDS and s.mask == full:
            raise MalformedState(where, f"{s.kind} requires a strict subset")
        if s.kind == "LE" and s.mask == 0:
            raise MalformedState(where, "LE requires a nonempty set")
        if s.kind in PAIR_KINDS and not 1 <= s.px <= n:
            raise MalformedState(where, f"px out of range: {s.px}")
        if s.kind in SET_KINDS and s.px:
            raise MalformedState(where, f"{s.kind} takes no px")
    for name in ("busy", "forbidden"):
        v = getattr(d, name)
        if not isinstance(v, int) or v < 0 or v & ~full:
            raise MalformedState(name, f"bad flag mask {v!r}")
    if not isinstance(d.mtx, bool):
        raise MalformedState("mtx", f"expected bool, got {d.mtx!r}")


def validate_spec(s) -> None:
    if not isinstance(s, tuple) or not s:
        raise MalformedState("s", "expected a nonempty tuple of nodes")
    for p, node in enumerate(s, start=1):
        if node not in SPEC_NODES:
            raise MalformedState(f"s[p{p}]", f"unknown node {node!r}")


# Canonical text encoding: "sub,sub,...|busy|forbidden|mtx" with bitmasks in
# binary, least significant thread first.

def _enc_sub(s: Substate) -> str:
    if s.kind in SET_KINDS:
        return f"{s.kind}[{s.mask}]"
    if s.kind in PAIR_KINDS:
        return f"{s.kind}[{s.px}:{s.mask}]"
    return s.kind


def _enc_bits(mask: int, n: int) -> str:
    return "".join("1" if mask >> i & 1 else "0" for i in range(n))


def encode_impl(d: ImplState) -> str:
    n = len(d.subs)
    return "{}|{}|{}|{}".format(
        ",".join(_enc_sub(s) for s in d.subs),
        _enc_bits(d.busy, n),
        _enc_bits(d.forbidden, n),
        int(d.mtx),
    )


_SUB_RE = re.compile(r"^(\w+?)(?:\[(?:(\d+):)?(\d+)\])?$")


def _dec_sub(text: str) -> Substate:
    m = _SUB_RE.match(text)
    if not m:
        raise MalformedState("subs", f"bad substate encoding {text!r}")
    kind, px, mask = m.group(1), m.group(2), m.group(3)
    return Substate(kind, int(px) if px else 0, int(mask) if mask else 0)


def _dec_bits(field: str, text: str, n: int) -> int:
    if len(text) != n or set(text) - {"0", "1"}:
        raise MalformedState(field, f"expected {n} binary digits, got {text!r}")
    return sum(1 << i for i, c in enumerate(text) if c == "1")


def decode_impl(text: str) -> ImplState:
    parts = text.split("|")
    if len(parts) != 4:
        raise MalformedState("state", f"expected 4 '|'-separated fields in {text!r}")
    subs, busy, forbidden, mtx = parts
    if mtx not in ("0", "1"):
        raise MalformedState("mtx", f"expected 0 or 1, got {mtx!r}")
    decoded = tuple(_dec_sub(s) for s in subs.split(","))
    n = len(decoded)
    d = ImplState(decoded, _dec_bits("busy", busy, n), _dec_bits("forbidden", forbidden, n), mtx == "1")
    validate_impl(d)
    return d


def encode_spec(s: tuple) -> str:
    return ",".join(s)


def decode_spec(text: str) -> tuple:
    s = tuple(text.split(","))
    validate_spec(s)
    return s
