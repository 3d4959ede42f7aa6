"""Cones-and-foci witnesses for the busy-forbidden models and the requirement checker.

The witnesses are the state mapping :func:`state_mapping`, the focus condition
:func:`focus`, the well-founded order :func:`order_lt` and the cone labeling
:func:`cone_label`.  :func:`check_requirements` evaluates the ten requirements
on every reachable implementation state.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

from .lpe import INT, TAU_VISIBLE, VISIBLE, Lpe, enabled, explore, format_label
from .models.impl import TAU_SAF_LOS, impl_lpe
from .models.spec import spec_lpe
from .models.states import (
    ES1, ES2, ES3, ES4, LOS1, LOS2, LS1, LS2, OE1, OE2, ImplState, Substate, all_substates,
    bit, full_mask, saf, saf_store, saf_undo,
)

REQUIREMENTS = ("I", "II", "III", "IV", "V", "VI", "IΔ", "IIΔ", "IIIΔ", "IVΔ")

_NODE_OF_KIND = {
    "Free": "Free",
    "ES1": "ES", "ES2": "ES", "ES3": "ES", "ES4": "ES",
    "LOE": "LOE",
    "Shared": "Shared",
    "LS1": "LS", "LS2": "LS",
    "EE": "EE",
    "SAF": "SAF", "SAF_store": "SAF", "SAF_undo": "SAF",
    "LOS1": "LOS", "LOS2": "LOS",
    "Exclusive": "Exclusive",
    "LE": "LE",
    "OE1": "OE", "OE2": "OE",
}


def substate_node(sub: Substate) -> str:
    return _NODE_OF_KIND[sub.kind]


def state_mapping(d: ImplState) -> tuple:
    """Map an implementation state to the node of every thread; flags are dropped."""
    return tuple(_NODE_OF_KIND[s.kind] for s in d.subs)


_FOCUS_KINDS = frozenset({"Free", "ES1", "LOE", "Shared", "LS1", "EE", "LOS1", "Exclusive", "OE1"})


def sub_focus(p: int, sub: Substate) -> bool:
    k = sub.kind
    if k in _FOCUS_KINDS:
        return True
    if k == "SAF":
        return sub.mask == 0
    if k == "LE":
        return sub.mask == bit(p)
    return False


def focus(d: ImplState) -> bool:
    return all(sub_focus(p, s) for p, s in enumerate(d.subs, 1))


class Cone(enum.Enum):
    DIVERGENT = "Δ"
    NON_DIVERGENT = "∇"

    def __str__(self) -> str:
        return self.value


def cone_label(s: tuple) -> Cone:
    if any(x in ("SAF", "LE") for x in s):
        return Cone.DIVERGENT
    if "ES" in s and any(x in ("LOS", "Exclusive") for x in s):
        return Cone.DIVERGENT
    return Cone.NON_DIVERGENT


# ---------------------------------------------------------------------------
# Order on substates


def order_generators(n: int, p: int) -> list:
    """Generating pairs ``(lower, higher)`` of the per-thread order for thread ``p``."""
    full = full_mask(n)
    threads = range(1, n + 1)
    strict = range(full)
    gens = [(ES1, ES2), (ES2, ES3), (ES3, ES4), (LS1, LS2), (LOS1, LOS2), (OE1, OE2)]
    for u in strict:
        for px in threads:
            if u & bit(px):
                gens.append((saf_store(px, u), saf(u)))
            gens.append((saf(u & ~bit(px)), saf_store(px, u)))
    for u in strict:
        for u2 in strict:
            for px in threads:
                gens.append((saf(u), saf_undo(px, u2)))
    le_sets = range(1, full + 1)
    pb = bit(p)
    for u in le_sets:
        for u2 in le_sets:
            proper = u & u2 == u and u != u2
            if (proper and u & pb) or (u & pb and not u2 & pb):
                gens.append((Substate("LE", 0, u), Substate("LE", 0, u2)))
    return gens


def _find_cycle(nodes, edges) -> Optional[list]:
    """Return one cycle of the directed graph as a node list, or ``None``."""
    succ = {v: [] for v in nodes}
    for a, b in edges:
        succ.setdefault(a, []).append(b)
        succ.setdefault(b, [])
    color = dict.fromkeys(succ, 0)
    parent = {}
    for root in succ:
        if color[root]:
            continue
        stack = [(root, iter(succ[root]))]
        color[root] = 1
        while stack:
            v, it = stack[-1]
            w = next(it, None)
            if w is None:
                color[v] = 2
                stack.pop()
            elif color[w] == 0:
                color[w] = 1
                parent[w] = v
                stack.append((w, iter(succ[w])))
            elif color[w] == 1:
                cycle = [v]
                while cycle[-1] != w:
                    cycle.append(parent[cycle[-1]])
                cycle.reverse()
                return cycle + [w]
    return None


@lru_cache(maxsize=None)
def _below(n: int) -> tuple:
    """Per thread, a map from each substate to the set of substates strictly below it."""
    result = []
    for p in range(1, n + 1):
        lower = {}
        for lo, hi in order_generators(n, p):
            lower.setdefault(hi, set()).add(lo)
        closed = {}

        def down(x):
            got = closed.get(x)
            if got is None:
                acc = set()
                for y in lower.get(x, ()):
                    acc.add(y)
                    acc |= down(y)
                got = closed[x] = frozenset(acc)
            return got

        for x in all_substates(n):
            down(x)
        result.append(closed)
    return tuple(result)


def substate_lt(n: int, p: int, a: Substate, b: Substate) -> bool:
    return a in _below(n)[p - 1].get(b, ())


def order_lt(d: ImplState, d2: ImplState) -> bool:
    """Pointwise product order: every thread equal or below, at least one strictly below."""
    n = len(d.subs)
    if len(d2.subs) != n:
        return False
    below = _below(n)
    strict = False
    for i, (a, b) in enumerate(zip(d.subs, d2.subs)):
        if a == b:
            continue
        if a in below[i].get(b, ()):
            strict = True
        else:
            return False
    return strict


@dataclass
class OrderVerdict:
    ok: bool
    cycle: Optional[list] = None
    thread: Optional[int] = None
    edges: int = 0
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_order_wellfounded(n: int, extra_edges=(), reachable_states=None) -> OrderVerdict:
    """Check that the generated per-thread orders are acyclic for ``n`` threads.

    ``extra_edges`` are additional ``(lower, higher)`` pairs added to every
    thread's generator graph.  When ``reachable_states`` is given, ``order_lt``
    is also checked to be irreflexive on them.
    """
    total = 0
    for p in range(1, n + 1):
        edges = order_generators(n, p) + list(extra_edges)
        total += len(edges)
        cycle = _find_cycle(list(all_substates(n)), edges)
        if cycle is not None:
            return OrderVerdict(False, cycle=cycle, thread=p, edges=total,
                                detail=" < ".join(str(x) for x in cycle))
    if reachable_states is not None:
        for d in reachable_states:
            if order_lt(d, d):
                return OrderVerdict(False, thread=None, edges=total, detail=f"order_lt reflexive at {d}")
    return OrderVerdict(True, edges=total)


# ---------------------------------------------------------------------------
# Requirement checking


@dataclass
class RequirementResult:
    name: str
    passed: bool = True
    state: object = None
    detail: str = ""

    def fail(self, state, detail: str) -> None:
        if self.passed:
            self.passed = False
            self.state = state
            self.detail = detail


@dataclass
class RequirementReport:
    results: dict
    states_checked: int = 0
    initial_ok: bool = True
    invariant_violation: object = None

    @property
    def all_pass(self) -> bool:
        return self.initial_ok and self.invariant_violation is None and all(r.passed for r in self.results.values())

    def failed(self) -> list:
        return [name for name, r in self.results.items() if not r.passed]

    def __getitem__(self, name: str) -> RequirementResult:
        return self.results[name]


def _act_key(label):
    return (label.name, label.params[0] if label.params else None)


def _is_act(label) -> bool:
    return label.kind in (VISIBLE, TAU_VISIBLE)


def check_requirements(
    impl: Lpe,
    spec: Lpe,
    invariant: Callable = lambda d: True,
    state_limit: int = 5_000_000,
    *,
    mapping: Callable = state_mapping,
    focus_condition: Callable = focus,
    lt: Callable = order_lt,
    cone: Callable = cone_label,
) -> RequirementReport:
    """Evaluate the ten requirements on every reachable implementation state.

    Actions of the two models are matched by label name and acting thread (the
    first label parameter); Int labels form the internal action.
    """
    results = {name: RequirementResult(name) for name in REQUIREMENTS}
    report = RequirementReport(results)
    report.initial_ok = mapping(impl.initial) == spec.initial
    if not invariant(impl.initial):
        report.invariant_violation = impl.initial
        return report
    lts = explore(impl, state_limit)
    states, out = lts.states, lts.out
    report.states_checked = len(states)

    spec_cache: dict = {}

    def spec_view(s):
        got = spec_cache.get(s)
        if got is None:
            acts: dict = {}
            ints = []
            for label, t in enabled(spec, s):
                if label.kind == INT:
                    ints.append(t)
                elif _is_act(label):
                    acts.setdefault(_act_key(label), []).append((label, t))
            got = spec_cache[s] = (acts, ints)
        return got

    def int_closure_keys(i):
        """Act keys enabled somewhere on an int path from state ``i``."""
        keys = set()
        seen = {i}
        queue = deque([i])
        while queue:
            u = queue.popleft()
            for label, v in out[u]:
                if label.kind == INT:
                    if v not in seen:
                        if len(seen) >= state_limit:
                            raise RuntimeError("int-path search exceeded the state limit")
                        seen.add(v)
                        queue.append(v)
                elif _is_act(label):
                    keys.add(_act_key(label))
        return keys

    r1, r2, r3, r4, r5, r6 = (results[k] for k in ("I", "II", "III", "IV", "V", "VI"))
    d1, d2, d3, d4 = (results[k] for k in ("IΔ", "IIΔ", "IIIΔ", "IVΔ"))
    divergent = Cone.DIVERGENT

    for i, d in enumerate(states):
        if not invariant(d):
            if report.invariant_violation is None:
                report.invariant_violation = d
            continue
        h = mapping(d)
        fc = focus_condition(d)
        label_h = cone(h)
        spec_acts, spec_ints = spec_view(h)
        int_targets = [states[j] for label, j in out[i] if label.kind == INT]
        act_steps = [(label, states[j]) for label, j in out[i] if _is_act(label)]

        if not fc and r1.passed and not any(lt(t, d) for t in int_targets):
            r1.fail(d, "no internal step towards a focus point")
        if r2.passed:
            for t in int_targets:
                if mapping(t) != h:
                    r2.fail(d, f"internal step leaves the cone: {t}")
                    break
        if fc and r3.passed:
            direct = {_act_key(label) for label, _ in act_steps}
            missing = [k for k in spec_acts if k not in direct]
            if missing:
                reachable = int_closure_keys(i)
                for k in missing:
                    if k not in reachable:
                        r3.fail(d, f"{format_label(spec_acts[k][0][0])} enabled in the specification "
                                   "but not after any int path")
                        break
        for label, t in act_steps:
            key = _act_key(label)
            matches = spec_acts.get(key)
            if not matches:
                r4.fail(d, f"{format_label(label)} not enabled in specification state {h}")
                continue
            if any(m.params != label.params for m, _ in matches):
                r5.fail(d, f"parameters of {format_label(label)} differ from the specification")
            ht = mapping(t)
            if any(st != ht for _, st in matches):
                r6.fail(d, f"{format_label(label)} leads to {ht}, specification to {matches[0][1]}")
        for st in spec_ints:
            if st != h:
                d1.fail(d, f"specification internal step {h} -> {st} is not a loop")
                break
        if (label_h is divergent) != bool(spec_ints):
            d2.fail(d, f"cone labelled {label_h} but specification int-loop "
                       f"{'present' if spec_ints else 'absent'} at {h}")
        if fc and (label_h is divergent) != bool(int_targets):
            d3.fail(d, f"focus point in cone {label_h} with{'out' if not int_targets else ''} internal steps")
        if label_h is not divergent:
            for t in int_targets:
                if not lt(t, d):
                    d4.fail(d, f"internal step in a non-divergent cone does not decrease: {t}")
                    break
    return report


# ---------------------------------------------------------------------------
# Int path from an SAF focus point to a state enabling the SAF -> LOS step


class WitnessError(ValueError):
    pass


def witness_int_path(d: ImplState, p_saf: int, lpe: Optional[Lpe] = None) -> list:
    """Build the int path from ``d`` after which ``p_saf`` can move from SAF to LOS.

    Every other thread is handled in index order: a thread in ES is made to
    back off (forbid, it reads forbidden, clears busy, the writer reads busy),
    any other thread is forbidden and its busy flag read.  Finally ``p_saf``
    forbids itself.  Each step is checked against ``lpe``'s enabled transitions;
    the list holds ``(label, state)`` pairs, the state being the step's target.
    """
    n = len(d.subs)
    if lpe is None:
        lpe = impl_lpe(n)
    if not focus(d):
        raise WitnessError("start state is not a focus point")
    if d.subs[p_saf - 1] != saf(0):
        raise WitnessError(f"thread p{p_saf} is not at SAF with an empty set")
    if not any(label.name == TAU_SAF_LOS and label.params == (p_saf,)
               for label, _ in enabled(spec_lpe(n), state_mapping(d))):
        raise WitnessError("SAF -> LOS is not enabled in the mapped specification state")

    path = []
    cur = d

    def take(name, expect):
        nonlocal cur
        for label, nxt in enabled(lpe, cur):
            if label.kind == INT and label.name == name and expect(nxt):
                path.append((label, nxt))
                cur = nxt
                return
        raise WitnessError(f"step {name} not enabled at {cur}")

    u = 0
    for p in range(1, n + 1):
        if p == p_saf:
            continue
        at_saf_store = lambda x, p=p, u=u: x.subs[p_saf - 1] == saf_store(p, u)
        if substate_node(cur.subs[p - 1]) == "ES":
            take("store_forbidden_true", at_saf_store)
            take("load_forbidden_true", lambda x, p=p: x.subs[p - 1] == ES4 and at_saf_store(x))
            take("store_busy_false", lambda x, p=p: x.subs[p - 1] == ES3 and at_saf_store(x))
        else:
            take("store_forbidden_true", at_saf_store)
        u |= bit(p)
        take("load_busy_false", lambda x, u=u: x.subs[p_saf - 1] == saf(u))
    take("store_forbidden_true", lambda x: x.subs[p_saf - 1] == saf_store(p_saf, u))
    if not any(label.name == TAU_SAF_LOS and label.params == (p_saf,) for label, _ in enabled(lpe, cur)):
        raise WitnessError(f"SAF -> LOS not enabled at the end of the path: {cur}")
    return path
