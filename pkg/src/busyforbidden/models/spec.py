"""External behaviour of the busy-forbidden protocol as an LPE over node maps.

A state is a tuple of node names, entry ``p - 1`` giving the node of thread
``p``.  Guards are the ones drawn on the node diagram: ES may move to LOE only
when no thread is in LOS or Exclusive (and loops improbably otherwise), and EE
may move to SAF only when SAF, LOS, LE and Exclusive are all empty.
"""

from __future__ import annotations

from ..lpe import Lpe, Summand, internal, tau_visible, visible
from .impl import TAU_EE_SAF, TAU_ES_LOE, TAU_LE_OE, TAU_SAF_LOS
from .states import encode_spec, spec_initial, validate_spec

IMPROBABLE = internal("improbable")


def _move(s, p, node):
    return s[: p - 1] + (node,) + s[p:]


def _occupied(s, nodes) -> bool:
    return any(x in nodes for x in s)


def es_loop_guard(s, p) -> bool:
    return s[p - 1] == "ES" and _occupied(s, ("LOS", "Exclusive"))


def es_loe_guard(s, p) -> bool:
    return s[p - 1] == "ES" and not _occupied(s, ("LOS", "Exclusive"))


def spec_lpe(n: int) -> Lpe:
    if n < 1:
        raise ValueError(f"need at least one thread, got {n}")
    threads = tuple(range(1, n + 1))

    def by_thread(s):
        return threads

    def step(sid, src, label, dst, extra=None):
        if extra is None:
            guard = lambda s, p: s[p - 1] == src
        else:
            guard = lambda s, p: s[p - 1] == src and extra(s, p)
        return Summand(sid, guard, label, lambda s, p: _move(s, p, dst), by_thread)

    def call(name):
        return lambda s, p: visible(name, p)

    def silent(name):
        return lambda s, p: tau_visible(name, p)

    def loop(sid, guard):
        return Summand(sid, guard, lambda s, p: IMPROBABLE, lambda s, p: s, by_thread)

    summands = (
        step("enter_shared_call", "Free", call("enter_shared_call"), "ES"),
        loop("improbable_es", es_loop_guard),
        Summand("tau_es_loe", es_loe_guard, silent(TAU_ES_LOE), lambda s, p: _move(s, p, "LOE"), by_thread),
        step("enter_shared_return", "LOE", call("enter_shared_return"), "Shared"),
        step("leave_shared_call", "Shared", call("leave_shared_call"), "LS"),
        step("leave_shared_return", "LS", call("leave_shared_return"), "Free"),
        step("enter_exclusive_call", "Free", call("enter_exclusive_call"), "EE"),
        step("tau_ee_saf", "EE", silent(TAU_EE_SAF), "SAF",
             extra=lambda s, p: not _occupied(s, ("SAF", "LOS", "LE", "Exclusive"))),
        loop("improbable_saf", lambda s, p: s[p - 1] == "SAF"),
        step("tau_saf_los", "SAF", silent(TAU_SAF_LOS), "LOS",
             extra=lambda s, p: not _occupied(s, ("LOE", "Shared"))),
        step("enter_exclusive_return", "LOS", call("enter_exclusive_return"), "Exclusive"),
        step("leave_exclusive_call", "Exclusive", call("leave_exclusive_call"), "LE"),
        loop("improbable_le", lambda s, p: s[p - 1] == "LE"),
        step("tau_le_oe", "LE", silent(TAU_LE_OE), "OE"),
        step("leave_exclusive_return", "OE", call("leave_exclusive_return"), "Free"),
    )
    return Lpe(spec_initial(n), summands, f"spec(N={n})", validate_spec, encode_spec)
