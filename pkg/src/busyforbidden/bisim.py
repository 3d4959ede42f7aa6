"""Hiding, branching bisimulation and divergence-preserving branching bisimulation.

Both checkers run signature refinement on the disjoint union of the two LTSs.
The signature of a state is the set of ``(label, block)`` pairs it can reach
by inert tau steps (tau steps that stay inside its block) followed by one
non-inert step; in divergence-preserving mode a state that can reach an inert
tau cycle additionally carries a divergence marker.  ``naive_dpbb_oracle`` is
an independent greatest-fixpoint computation over pairs, kept for small inputs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .lpe import ALL_INT, INT, SILENT, TAU, Lts, format_label

STANDARD_HIDE = frozenset({ALL_INT, "tau_es_loe", "tau_ee_saf", "tau_saf_los", "tau_le_oe"})

_DIVERGENT = ("<divergent>",)


class HiddenLts:
    """An LTS in which some labels have been replaced by :data:`TAU`.

    States and transition endpoints are those of ``base``; only labels differ.
    """

    def __init__(self, base: Lts, transitions: list, hidden: frozenset):
        self.base = base
        self.hidden = hidden
        self.transitions = transitions
        self.out: list[list] = [[] for _ in base.states]
        for src, label, dst in transitions:
            self.out[src].append((label, dst))

    @property
    def states(self) -> list:
        return self.base.states

    @property
    def initial(self) -> int:
        return self.base.initial

    @property
    def num_states(self) -> int:
        return len(self.base.states)

    @property
    def num_transitions(self) -> int:
        return len(self.transitions)

    def __len__(self) -> int:
        return len(self.base.states)

    def labels(self) -> set:
        return {label for _, label, _ in self.transitions}

    def __repr__(self) -> str:
        return f"HiddenLts(states={self.num_states}, transitions={self.num_transitions})"


def hide(lts: Lts, labels: Iterable[str] = ()) -> HiddenLts:
    """Rename every transition whose label name is in ``labels`` to tau.

    The reserved name ``"*int*"`` hides all Int labels.
    """
    names = frozenset(labels)
    all_int = ALL_INT in names

    def conceal(label):
        if label.kind == SILENT:
            return label
        if label.name in names or (all_int and label.kind == INT):
            return TAU
        return label

    return HiddenLts(lts, [(s, conceal(l), t) for s, l, t in lts.transitions], names)


def as_hidden(lts) -> HiddenLts:
    return lts if isinstance(lts, HiddenLts) else hide(lts, ())


@dataclass
class EquivalenceVerdict:
    """Outcome of an equivalence check.

    When ``equivalent``, ``relation`` holds the related ``(a_index, b_index)``
    pairs.  Otherwise ``pair`` is a distinguishing pair of states and
    ``reason`` describes the first signature difference that split them.
    """

    equivalent: bool
    relation: Optional[frozenset] = None
    pair: Optional[tuple] = None
    trace: list = field(default_factory=list)
    reason: str = ""
    blocks: int = 0
    rounds: int = 0
    # block id of every state of a and of b in the final partition
    block_of: tuple = field(default=((), ()), repr=False)

    def __bool__(self) -> bool:
        return self.equivalent


def _union(a: HiddenLts, b: HiddenLts):
    """Adjacency of the disjoint union with labels interned to small ints (tau is 0)."""
    label_ids = {TAU: 0}
    names = ["tau"]
    offset = a.num_states
    out = []
    for lts, shift in ((a, 0), (b, offset)):
        for edges in lts.out:
            row = []
            for label, dst in edges:
                lid = label_ids.get(label)
                if lid is None:
                    lid = label_ids[label] = len(names)
                    names.append(format_label(label))
                row.append((lid, dst + shift))
            out.append(row)
    return out, names, offset


def _inert_sccs(out, block):
    """Tarjan's algorithm on the inert tau graph.

    Returns ``(scc_of, sccs)`` with ``sccs`` in reverse topological order, i.e.
    every SCC appears after all SCCs reachable from it.
    """
    n = len(out)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    scc_of = [-1] * n
    sccs = []
    stack = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            edges = out[v]
            bv = block[v]
            while i < len(edges):
                lid, w = edges[i]
                i += 1
                if lid != 0 or block[w] != bv:
                    continue
                if index[w] == -1:
                    work[-1] = (v, i)
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                    break
                if on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    if low[v] < low[u]:
                        low[u] = low[v]
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        scc_of[w] = len(sccs)
                        comp.append(w)
                        if w == v:
                            break
                    sccs.append(comp)
    return scc_of, sccs


def _signatures(out, block, divergence: bool):
    scc_of, sccs = _inert_sccs(out, block)
    scc_sig = [None] * len(sccs)
    scc_div = [False] * len(sccs)
    for c, comp in enumerate(sccs):
        sig = set()
        div = False
        for s in comp:
            bs = block[s]
            for lid, t in out[s]:
                bt = block[t]
                if lid == 0 and bt == bs:
                    d = scc_of[t]
                    if d == c:
                        div = True  # cycle inside the SCC (or a self-loop)
                    else:
                        sig |= scc_sig[d]
                        div = div or scc_div[d]
                else:
                    sig.add((lid, bt))
        scc_div[c] = div
        scc_sig[c] = frozenset(sig)
    sigs = []
    for s in range(len(out)):
        c = scc_of[s]
        sig = scc_sig[c]
        if divergence and scc_div[c]:
            sig = sig | {_DIVERGENT}
        sigs.append(sig)
    return sigs


def _refine(a: HiddenLts, b: HiddenLts, divergence: bool) -> EquivalenceVerdict:
    a, b = as_hidden(a), as_hidden(b)
    out, names, offset = _union(a, b)
    n = len(out)
    block = [0] * n
    count = 1
    rounds = 0
    history = [block]
    while True:
        rounds += 1
        sigs = _signatures(out, block, divergence)
        ids: dict = {}
        new_block = [0] * n
        for s in range(n):
            key = (block[s], sigs[s])
            bid = ids.get(key)
            if bid is None:
                bid = ids[key] = len(ids)
            new_block[s] = bid
        if len(ids) == count:
            break
        count = len(ids)
        block = new_block
        history.append(block)
    ia, ib = a.initial, b.initial + offset
    block_a = tuple(block[:offset])
    block_b = tuple(block[offset:])
    if block[ia] == block[ib]:
        members_b: dict = {}
        for j, bj in enumerate(block_b):
            members_b.setdefault(bj, []).append(j)
        relation = frozenset((i, j) for i, bi in enumerate(block_a) for j in members_b.get(bi, ()))
        return EquivalenceVerdict(True, relation=relation, blocks=count, rounds=rounds, block_of=(block_a, block_b))
    pair, trace, reason = _counterexample(out, history, divergence, ia, ib, names)
    return EquivalenceVerdict(
        False, pair=(pair[0], pair[1] - offset), trace=trace, reason=reason, blocks=count,
        rounds=rounds, block_of=(block_a, block_b),
    )


def _inert_view(out, block, s, divergence):
    """Signature items of ``s`` under ``block`` with a witnessing edge each, plus its divergence bit."""
    bs = block[s]
    closure = {s}
    stack = [s]
    while stack:
        u = stack.pop()
        for lid, v in out[u]:
            if lid == 0 and block[v] == bs and v not in closure:
                closure.add(v)
                stack.append(v)
    items = {}
    for u in sorted(closure):
        for lid, v in out[u]:
            if not (lid == 0 and block[v] == bs):
                items.setdefault((lid, block[v]), (u, v))
    div = False
    if divergence:
        alive = set(closure)
        changed = True
        while changed:
            changed = False
            for u in list(alive):
                if not any(lid == 0 and v in alive for lid, v in out[u]):
                    alive.discard(u)
                    changed = True
        div = bool(alive)
    return items, div


def _counterexample(out, history, divergence, s, t, names):
    """Walk from a distinguishing pair towards the difference that separates it.

    Returns the final pair, the labels of the steps taken to reach it and a
    description of the difference.  Each step follows a signature item present on one side only to a pair that
    was separated in an earlier refinement round, so the walk terminates.
    """
    trace = []
    while True:
        k = next(i for i in range(1, len(history)) if history[i][s] != history[i][t])
        prev = history[k - 1]
        items_s, div_s = _inert_view(out, prev, s, divergence)
        items_t, div_t = _inert_view(out, prev, t, divergence)
        if div_s != div_t:
            side = "first" if div_s else "second"
            return (s, t), trace, f"only the {side} state can diverge (infinite tau path within its class)"
        only_s = sorted(set(items_s) - set(items_t))
        only_t = sorted(set(items_t) - set(items_s))
        if only_s:
            (lid, _), mine, theirs, first = only_s[0], items_s, items_t, True
        else:
            (lid, _), mine, theirs, first = only_t[0], items_t, items_s, False
        _, target = mine[(only_s or only_t)[0]]
        other = t if first else s
        if lid == 0:
            nxt_other = other
        else:
            options = sorted(v for (l2, _), (_, v) in theirs.items() if l2 == lid)
            if not options:
                side = "first" if first else "second"
                return (s, t), trace, f"only the {side} state can perform {names[lid]}"
            nxt_other = options[0]
        trace.append(names[lid])
        s, t = (target, nxt_other) if first else (nxt_other, target)


def branching_bisim(a: HiddenLts, b: HiddenLts) -> EquivalenceVerdict:
    """Decide branching bisimilarity of the initial states of ``a`` and ``b``."""
    return _refine(a, b, divergence=False)


def dpbb(a: HiddenLts, b: HiddenLts) -> EquivalenceVerdict:
    """Decide divergence-preserving branching bisimilarity of the initial states."""
    return _refine(a, b, divergence=True)


# ---------------------------------------------------------------------------
# Direct checking of the four transfer conditions


def _tau_closure(lts: HiddenLts, s: int, cache: dict) -> frozenset:
    got = cache.get(s)
    if got is None:
        seen = {s}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for label, v in lts.out[u]:
                if label == TAU and v not in seen:
                    seen.add(v)
                    queue.append(v)
        got = cache[s] = frozenset(seen)
    return got


def _divergent_within(lts: HiddenLts, start: int, allowed) -> set:
    """States on an infinite tau path from ``start`` that stays inside ``allowed``.

    Empty when no such path exists.
    """
    reach = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for label, v in lts.out[u]:
            if label == TAU and v in allowed and v not in reach:
                reach.add(v)
                queue.append(v)
    # Iteratively drop states with no tau successor left inside reach.
    alive = set(reach)
    changed = True
    while changed:
        changed = False
        for u in list(alive):
            if not any(label == TAU and v in alive for label, v in lts.out[u]):
                alive.discard(u)
                changed = True
    return alive if start in alive else set()


def check_transfer_conditions(a: HiddenLts, b: HiddenLts, relation) -> list:
    """Re-check B1, B2, D1 and D2 literally for every pair in ``relation``.

    ``relation`` is a collection of ``(a_index, b_index)`` pairs.  Returns a
    list of ``(condition, a_index, b_index, detail)`` violations, empty when the
    relation is a divergence-preserving branching bisimulation.
    """
    a, b = as_hidden(a), as_hidden(b)
    fwd: dict = {}
    bwd: dict = {}
    for s, t in relation:
        fwd.setdefault(s, set()).add(t)
        bwd.setdefault(t, set()).add(s)
    ca: dict = {}
    cb: dict = {}
    violations = []

    def related(s, t):
        return t in fwd.get(s, ())

    for s, t in relation:
        # B1
        for label, s2 in a.out[s]:
            if label == TAU and related(s2, t):
                continue
            if not any(
                related(s, t1) and any(l2 == label and related(s2, t2) for l2, t2 in b.out[t1])
                for t1 in _tau_closure(b, t, cb)
            ):
                violations.append(("B1", s, t, format_label(label)))
        # B2
        for label, t2 in b.out[t]:
            if label == TAU and related(s, t2):
                continue
            if not any(
                related(s1, t) and any(l2 == label and related(s2, t2) for l2, s2 in a.out[s1])
                for s1 in _tau_closure(a, s, ca)
            ):
                violations.append(("B2", s, t, format_label(label)))
        # D1
        inf = _divergent_within(a, s, bwd.get(t, ()))
        if inf and not any(label == TAU and fwd.get(x, set()) & {t1} for label, t1 in b.out[t] for x in inf):
            violations.append(("D1", s, t, "divergence not matched"))
        # D2
        inf = _divergent_within(b, t, fwd.get(s, ()))
        if inf and not any(label == TAU and bwd.get(x, set()) & {s1} for label, s1 in a.out[s] for x in inf):
            violations.append(("D2", s, t, "divergence not matched"))
    return violations


# ---------------------------------------------------------------------------
# Independent oracle


class OracleTooLarge(ValueError):
    pass


@dataclass
class OracleRelation:
    """Greatest relation on the disjoint union satisfying B1, B2, D1 and D2.

    States are numbered as in the union: ``a`` first, then ``b`` shifted by
    ``offset``.
    """

    pairs: frozenset
    offset: int
    initial_pair: tuple

    def related(self, a_index: int, b_index: int) -> bool:
        return (a_index, b_index + self.offset) in self.pairs

    @property
    def equivalent(self) -> bool:
        return self.initial_pair in self.pairs

    def cross_pairs(self) -> frozenset:
        k = self.offset
        return frozenset((s, t - k) for s, t in self.pairs if s < k <= t)


ORACLE_LIMIT = 2000


def naive_dpbb_oracle(a: HiddenLts, b: HiddenLts, limit: int = ORACLE_LIMIT) -> OracleRelation:
    """Greatest fixpoint by deleting violating pairs from the full relation."""
    a, b = as_hidden(a), as_hidden(b)
    offset = a.num_states
    n = offset + b.num_states
    if n > limit:
        raise OracleTooLarge(f"oracle refuses {n} combined states (limit {limit})")
    out = [list(edges) for edges in a.out] + [[(l, t + offset) for l, t in edges] for edges in b.out]
    tau_succ = [[t for l, t in edges if l == TAU] for edges in out]
    closure = []
    for s in range(n):
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for v in tau_succ[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        closure.append(seen)
    rel = [set(range(n)) for _ in range(n)]

    def b1_ok(s, t):
        for label, s2 in out[s]:
            if label == TAU and t in rel[s2]:
                continue
            rs, rs2 = rel[s], rel[s2]
            if not any(t1 in rs and any(l2 == label and t2 in rs2 for l2, t2 in out[t1]) for t1 in closure[t]):
                return False
        return True

    def b2_ok(s, t):
        for label, t2 in out[t]:
            if label == TAU and t2 in rel[s]:
                continue
            if not any(t in rel[s1] and any(l2 == label and t2 in rel[s2] for l2, s2 in out[s1]) for s1 in closure[s]):
                return False
        return True

    def diverges_within(s, allowed):
        reach = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for v in tau_succ[u]:
                if v in allowed and v not in reach:
                    reach.add(v)
                    stack.append(v)
        alive = set(reach)
        changed = True
        while changed:
            changed = False
            for u in list(alive):
                if not any(v in alive for v in tau_succ[u]):
                    alive.discard(u)
                    changed = True
        return alive

    def d1_ok(s, t):
        inf = diverges_within(s, {x for x in range(n) if t in rel[x]})
        return not inf or any(any(t1 in rel[x] for x in inf) for t1 in tau_succ[t])

    def d2_ok(s, t):
        inf = diverges_within(t, rel[s])
        return not inf or any(any(y in rel[s1] for y in inf) for s1 in tau_succ[s])

    changed = True
    while changed:
        changed = False
        for s in range(n):
            for t in list(rel[s]):
                if not (b1_ok(s, t) and b2_ok(s, t) and d1_ok(s, t) and d2_ok(s, t)):
                    rel[s].discard(t)
                    changed = True
    pairs = frozenset((s, t) for s in range(n) for t in rel[s])
    return OracleRelation(pairs, offset, (a.initial, b.initial + offset))
