"""Acceptance criteria, one test per criterion.

Every test records a ``criterion N PASS|FAIL`` line; the lines are printed in
the pytest terminal summary, or directly when this file is run as a script.
"""

import time

import pytest

from conftest import hidden_pair, lts, model

from busyforbidden.bisim import ORACLE_LIMIT, branching_bisim, dpbb, naive_dpbb_oracle
from busyforbidden.conesfoci import (
    check_order_wellfounded,
    check_requirements,
    focus,
    state_mapping,
    witness_int_path,
)
from busyforbidden.lockcore import run_stress
from busyforbidden.lpe import INT, check_invariant, enabled
from busyforbidden.models import MUTATIONS, flags_match, invariant_pred
from busyforbidden.models.states import saf

RESULTS = {}
ALL = invariant_pred("all")


def record(number, ok, detail, elapsed=None, budget=None):
    timing = ""
    if elapsed is not None:
        timing = f" [{elapsed:.1f}s" + (f" of {budget}s]" if budget else "]")
        if budget is not None and elapsed > budget:
            ok = False
            timing += " over budget"
    RESULTS[number] = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {detail}{timing}"
    print(RESULTS[number])
    return ok


def test_criterion_01_equivalence():
    t0 = time.perf_counter()
    verdicts = {n: dpbb(*hidden_pair(n)).equivalent for n in (1, 2, 3)}
    ok = all(verdicts.values())
    assert record(1, ok, f"dpbb(impl, spec) per N: {verdicts}", time.perf_counter() - t0, 300)


def test_criterion_02_invariants():
    t0 = time.perf_counter()
    rows = []
    for n in (1, 2, 3):
        holds = all(check_invariant(model("impl", n), invariant_pred(w)).holds for w in ("mutex", "busy", "forbidden"))
        derived = all(flags_match(d) for d in lts("impl", n).states)
        rows.append((n, holds, derived))
    ok = all(h and d for _, h, d in rows)
    detail = ", ".join(f"N={n}: invariants {'hold' if h else 'fail'}, flags {'match' if d else 'differ'}" for n, h, d in rows)
    assert record(2, ok, detail, time.perf_counter() - t0, 120)


def _requirements(n):
    return check_requirements(model("impl", n), model("spec", n), ALL)


def test_criterion_03_cones_and_foci():
    t0 = time.perf_counter()
    failed = {n: _requirements(n).failed() for n in (2, 3)}
    ok = not any(failed.values())
    assert record(3, ok, f"failing requirements per N: {failed}", time.perf_counter() - t0, 600)


def test_criterion_04_oracle_agreement():
    t0 = time.perf_counter()
    disagreements = []
    checked = []
    for n in (1, 2):
        for mutation in [None] + sorted(MUTATIONS):
            a, b = hidden_pair(n, mutation)
            if a.num_states + b.num_states > ORACLE_LIMIT:
                continue
            fast = dpbb(a, b).equivalent
            slow = naive_dpbb_oracle(a, b).equivalent
            checked.append((n, mutation))
            if fast != slow:
                disagreements.append((n, mutation, fast, slow))
    ok = not disagreements and len(checked) == 12
    assert record(4, ok, f"{len(checked)} pairs compared, disagreements: {disagreements}", time.perf_counter() - t0)


def test_criterion_05_divergence_sensitivity():
    rows = {}
    for mutation in ("drop-spec-improbable-saf", "drop-spec-improbable-le", "drop-spec-improbable-es"):
        a, b = hidden_pair(2, mutation)
        rows[mutation] = (branching_bisim(a, b).equivalent, dpbb(a, b).equivalent)
    ok = all(bb and not dp for bb, dp in rows.values())
    assert record(5, ok, "(branching, dpbb) per mutation at N=2: " + str(rows))


def test_criterion_06_mutation_kill():
    busy_holds = check_invariant(model("impl", 2, "skip-busy-store"), invariant_pred("busy")).holds
    skip_dpbb = dpbb(*hidden_pair(2, "skip-busy-store")).equivalent
    swap = check_requirements(model("impl", 2), model("spec", 2, "swap-es-guard"), ALL).failed()
    ok = (not busy_holds or not skip_dpbb) and bool({"III", "IV"} & set(swap))
    detail = (f"skip-busy-store: busy invariant {'holds' if busy_holds else 'fails'}, dpbb {skip_dpbb}; "
              f"swap-es-guard fails {swap}")
    assert record(6, ok, detail)


def test_criterion_07_witness_paths():
    counts = {}
    problems = []
    for n in (1, 2, 3):
        impl, spec = model("impl", n), model("spec", n)
        counts[n] = 0
        for d in lts("impl", n).states:
            if not focus(d):
                continue
            h = state_mapping(d)
            for p in range(1, n + 1):
                if d.subs[p - 1] != saf(0):
                    continue
                if not any(l.name == "tau_saf_los" and l.params == (p,) for l, _ in enabled(spec, h)):
                    continue
                counts[n] += 1
                cur = d
                for label, nxt in witness_int_path(d, p, impl):
                    if label.kind != INT or (label, nxt) not in enabled(impl, cur) or state_mapping(nxt) != h:
                        problems.append((n, d, label))
                        break
                    cur = nxt
                else:
                    if not any(l.name == "tau_saf_los" and l.params == (p,) for l, _ in enabled(impl, cur)):
                        problems.append((n, d, "terminal"))
    ok = not problems and all(counts.values())
    assert record(7, ok, f"paths checked per N: {counts}, invalid: {len(problems)}")


def test_criterion_08_order_wellfounded():
    verdicts = {n: check_order_wellfounded(n) for n in (1, 2, 3)}
    ok = all(verdicts.values())
    assert record(8, ok, "acyclic per N: " + str({n: v.ok for n, v in verdicts.items()}))


def test_criterion_09_lock_stress():
    report = run_stress(8, 6, 2, 10_000, seed=42, timeout=60)
    ok = report.violations == 0 and not report.timed_out and not report.errors
    detail = (f"writer overlaps {report.writer_overlap_violations}, reader/writer overlaps "
              f"{report.reader_writer_violations}, ops {sum(report.ops_completed)}, timed out {report.timed_out}")
    assert record(9, ok, detail, report.elapsed, 60)


def test_criterion_10_cones_and_foci_implies_equivalence():
    rows = {}
    for n in (1, 2, 3):
        rows[n] = (_requirements(n).all_pass, dpbb(*hidden_pair(n)).equivalent)
    ok = all(eq for framework, eq in rows.values() if framework) and any(f for f, _ in rows.values())
    assert record(10, ok, "(requirements pass, dpbb equivalent) per N: " + str(rows))


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
