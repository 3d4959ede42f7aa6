"""Linearized model of the busy-forbidden implementation for N threads.

Summands follow the linearized process equation of the implementation, with
four repairs applied (see ``README.md``):

* ``store(Busy(p), true, p)`` in ES2 sets ``busy(p)``;
* ``leave_shared_return`` from LS1 goes to Free;
* clearing the last forbidden flag in ``LE{px}`` goes to OE2, and OE2 releases
  the mutex before OE1;
* re-setting a forbidden flag in LE stores ``true``.
"""

from __future__ import annotations

from ..lpe import Lpe, Summand, internal, tau_visible, visible
from .states import (
    EE, ES1, ES2, ES3, ES4, EXCLUSIVE, FREE, LOE, LOS1, LOS2, LS1, LS2, OE1, OE2,
    SAF_EMPTY, SHARED, bit, encode_impl, full_mask, impl_initial, le, saf, saf_store,
    saf_undo, validate_impl,
)

TAU_ES_LOE = "tau_es_loe"
TAU_EE_SAF = "tau_ee_saf"
TAU_SAF_LOS = "tau_saf_los"
TAU_LE_OE = "tau_le_oe"
TAU_VISIBLE_NAMES = (TAU_ES_LOE, TAU_EE_SAF, TAU_SAF_LOS, TAU_LE_OE)

CALL_RETURN_NAMES = (
    "enter_shared_call", "enter_shared_return",
    "leave_shared_call", "leave_shared_return",
    "enter_exclusive_call", "enter_exclusive_return",
    "leave_exclusive_call", "leave_exclusive_return",
)


def _put(d, p, sub, busy=None, forbidden=None, mtx=None):
    subs = d.subs[: p - 1] + (sub,) + d.subs[p:]
    return d._replace(
        subs=subs,
        busy=d.busy if busy is None else busy,
        forbidden=d.forbidden if forbidden is None else forbidden,
        mtx=d.mtx if mtx is None else mtx,
    )


def impl_lpe(n: int, *, literal_domains: bool = False, set_busy_in_es2: bool = True) -> Lpe:
    """Build the implementation LPE for ``n`` threads.

    With ``literal_domains`` the ``(p, px, U)`` summands enumerate every thread
    pair and every subset, exactly as the sums are written.  By default the
    domain is narrowed to the ``U`` (and ``px``) stored in ``d_p``, which are the
    only values whose guard can hold.  ``set_busy_in_es2=False`` reproduces the
    unrepaired ES2 store and backs the ``skip-busy-store`` mutation.
    """
    if n < 1:
        raise ValueError(f"need at least one thread, got {n}")
    threads = tuple(range(1, n + 1))
    full = full_mask(n)
    subsets = tuple(range(full + 1))
    strict_subsets = tuple(range(full))

    def by_thread(d):
        return threads

    def at(kind):
        """Summation values (p, px, U) for summands guarded by ``d_p`` of this kind."""
        if literal_domains:
            domain_u = subsets if kind == "LE" else strict_subsets

            def literal(d):
                return [(p, px, u) for p in threads for px in threads for u in domain_u]

            return literal
        if kind in ("SAF_store", "SAF_undo"):
            def stored(d):
                return [(p, s.px, s.mask) for p, s in enumerate(d.subs, 1) if s.kind == kind]
            return stored

        def with_px(d):
            return [(p, px, s.mask) for p, s in enumerate(d.subs, 1) if s.kind == kind for px in threads]

        return with_px

    def call(name):
        return lambda d, p: visible(name, p)

    def simple(sid, pre, label, post, extra=None, **updates):
        """Summand over threads moving ``d_p`` from ``pre`` to ``post``."""
        if extra is None:
            guard = lambda d, p: d.subs[p - 1] == pre
        else:
            guard = lambda d, p: d.subs[p - 1] == pre and extra(d, p)
        if updates:
            def nxt(d, p):
                kw = {k: f(d, p) for k, f in updates.items()}
                return _put(d, p, post, **kw)
        else:
            nxt = lambda d, p: _put(d, p, post)
        return Summand(sid, guard, label, nxt, by_thread)

    int_store_busy_true = internal("store_busy_true")
    int_load_forbidden_true = internal("load_forbidden_true")
    int_store_busy_false = internal("store_busy_false")
    int_improbable = internal("improbable")
    int_store_forbidden_true = internal("store_forbidden_true")
    int_store_forbidden_false = internal("store_forbidden_false")
    int_load_busy_true = internal("load_busy_true")
    int_load_busy_false = internal("load_busy_false")
    int_internal = internal("internal")
    int_unlock = internal("unlock")

    es2_updates = {"busy": lambda d, p: d.busy | bit(p)} if set_busy_in_es2 else {}

    summands = [
        simple("enter_shared_call", FREE, call("enter_shared_call"), ES2),
        simple("enter_exclusive_call", FREE, call("enter_exclusive_call"), EE),
        simple("es_store_busy_true", ES2, lambda d, p: int_store_busy_true, ES1, **es2_updates),
        simple("es_load_forbidden_true", ES1, lambda d, p: int_load_forbidden_true, ES4,
               extra=lambda d, p: bool(d.forbidden & bit(p))),
        simple("es_load_forbidden_false", ES1, lambda d, p: tau_visible(TAU_ES_LOE, p), LOE,
               extra=lambda d, p: not d.forbidden & bit(p)),
        simple("es_store_busy_false", ES4, lambda d, p: int_store_busy_false, ES3,
               busy=lambda d, p: d.busy & ~bit(p)),
        simple("es_improbable", ES3, lambda d, p: int_improbable, ES2),
        simple("enter_shared_return", LOE, call("enter_shared_return"), SHARED),
        simple("leave_shared_call", SHARED, call("leave_shared_call"), LS2),
        simple("ls_store_busy_false", LS2, lambda d, p: int_store_busy_false, LS1,
               busy=lambda d, p: d.busy & ~bit(p)),
        simple("leave_shared_return", LS1, call("leave_shared_return"), FREE),
        simple("lock", EE, lambda d, p: tau_visible(TAU_EE_SAF, p), SAF_EMPTY,
               extra=lambda d, p: not d.mtx, mtx=lambda d, p: True),
        Summand(
            "saf_store_forbidden_true",
            lambda d, e: d.subs[e[0] - 1] == saf(e[2]),
            lambda d, e: int_store_forbidden_true,
            lambda d, e: _put(d, e[0], saf_store(e[1], e[2]), forbidden=d.forbidden | bit(e[1])),
            at("SAF"),
        ),
        Summand(
            "saf_load_busy_true",
            lambda d, e: d.subs[e[0] - 1] == saf_store(e[1], e[2]) and bool(d.busy & bit(e[1])),
            lambda d, e: int_load_busy_true,
            lambda d, e: _put(d, e[0], saf_undo(e[1], e[2])),
            at("SAF_store"),
        ),
        Summand(
            "saf_load_busy_false_last",
            lambda d, e: (d.subs[e[0] - 1] == saf_store(e[1], e[2])
                          and e[2] == full & ~bit(e[1]) and not d.busy & bit(e[1])),
            lambda d, e: tau_visible(TAU_SAF_LOS, e[0]),
            lambda d, e: _put(d, e[0], LOS2),
            at("SAF_store"),
        ),
        Summand(
            "saf_load_busy_false",
            lambda d, e: (d.subs[e[0] - 1] == saf_store(e[1], e[2])
                          and e[2] != full & ~bit(e[1]) and not d.busy & bit(e[1])),
            lambda d, e: int_load_busy_false,
            lambda d, e: _put(d, e[0], saf(e[2] | bit(e[1]))),
            at("SAF_store"),
        ),
        Summand(
            "saf_store_forbidden_false",
            lambda d, e: d.subs[e[0] - 1] == saf_store(e[1], e[2]),
            lambda d, e: int_store_forbidden_false,
            lambda d, e: _put(d, e[0], saf(e[2] & ~bit(e[1])), forbidden=d.forbidden & ~bit(e[1])),
            at("SAF_store"),
        ),
        Summand(
            "saf_undo_store_forbidden_false",
            lambda d, e: d.subs[e[0] - 1] == saf_undo(e[1], e[2]),
            lambda d, e: int_store_forbidden_false,
            lambda d, e: _put(d, e[0], saf(e[2] & ~bit(e[1])), forbidden=d.forbidden & ~bit(e[1])),
            at("SAF_undo"),
        ),
        simple("los_internal", LOS2, lambda d, p: int_internal, LOS1),
        simple("enter_exclusive_return", LOS1, call("enter_exclusive_return"), EXCLUSIVE),
        simple("leave_exclusive_call", EXCLUSIVE, call("leave_exclusive_call"), le(full)),
        Summand(
            "le_store_forbidden_false_last",
            lambda d, e: d.subs[e[0] - 1] == le(e[2]) and e[2] == bit(e[1]),
            lambda d, e: tau_visible(TAU_LE_OE, e[0]),
            lambda d, e: _put(d, e[0], OE2, forbidden=d.forbidden & ~bit(e[1])),
            at("LE"),
        ),
        Summand(
            "le_store_forbidden_false",
            lambda d, e: d.subs[e[0] - 1] == le(e[2]) and e[2] != bit(e[1]),
            lambda d, e: int_store_forbidden_false,
            lambda d, e: _put(d, e[0], le(e[2] & ~bit(e[1])), forbidden=d.forbidden & ~bit(e[1])),
            at("LE"),
        ),
        Summand(
            "le_store_forbidden_true",
            lambda d, e: d.subs[e[0] - 1] == le(e[2]),
            lambda d, e: int_store_forbidden_true,
            lambda d, e: _put(d, e[0], le(e[2] | bit(e[1])), forbidden=d.forbidden | bit(e[1])),
            at("LE"),
        ),
        simple("oe_unlock", OE2, lambda d, p: int_unlock, OE1, mtx=lambda d, p: False),
        simple("leave_exclusive_return", OE1, call("leave_exclusive_return"), FREE),
    ]
    return Lpe(impl_initial(n), tuple(summands), f"impl(N={n})", validate_impl, encode_impl)
