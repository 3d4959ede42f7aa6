import pytest

from conftest import lts, model

from busyforbidden.conesfoci import (
    REQUIREMENTS,
    Cone,
    WitnessError,
    check_order_wellfounded,
    check_requirements,
    cone_label,
    focus,
    order_generators,
    order_lt,
    state_mapping,
    substate_lt,
    witness_int_path,
)
from busyforbidden.lpe import INT, enabled
from busyforbidden.models import ImplState, Substate, impl_lpe, invariant_pred, spec_lpe
from busyforbidden.models.states import (
    ES1, ES2, ES3, ES4, EE, FREE, LOS1, LOS2, SHARED, impl_initial, le, saf, saf_store, saf_undo,
)

ALL = invariant_pred("all")


def state(*subs, busy=0, forbidden=0, mtx=False):
    return ImplState(tuple(subs), busy, forbidden, mtx)


class TestWitnesses:
    def test_mapping_forgets_substate_details(self):
        d = state(saf_store(2, 0b01), ES4, busy=0b10, forbidden=0b11, mtx=True)
        assert state_mapping(d) == ("SAF", "ES")

    def test_initial_state_maps_to_initial_state(self):
        assert state_mapping(impl_initial(3)) == spec_lpe(3).initial

    def test_focus_per_thread(self):
        assert focus(state(ES1, saf(0)))
        assert not focus(state(ES2, FREE))
        assert focus(state(FREE, le(0b10)))
        assert focus(state(le(0b01), FREE))
        assert not focus(state(le(0b11), FREE))
        assert not focus(state(saf(0b10), FREE))

    @pytest.mark.parametrize("nodes,expected", [
        (("SAF", "Free"), Cone.DIVERGENT),
        (("LE", "Free"), Cone.DIVERGENT),
        (("ES", "Exclusive"), Cone.DIVERGENT),
        (("ES", "LOS"), Cone.DIVERGENT),
        (("ES", "Free"), Cone.NON_DIVERGENT),
        (("Exclusive", "Free"), Cone.NON_DIVERGENT),
    ])
    def test_cone_label(self, nodes, expected):
        assert cone_label(nodes) is expected

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_cone_label_matches_spec_loops(self, n):
        spec = model("spec", n)
        for s in lts("spec", n).states:
            has_loop = any(label.kind == INT for label, _ in enabled(spec, s))
            assert (cone_label(s) is Cone.DIVERGENT) == has_loop


class TestOrder:
    def test_retry_loop_is_ordered_towards_es1(self):
        assert substate_lt(2, 1, ES1, ES2)
        assert substate_lt(2, 1, ES2, ES4)
        assert not substate_lt(2, 1, ES4, ES1)

    def test_saf_pending_store(self):
        assert substate_lt(2, 1, saf_store(1, 0b01), saf(0b01))
        assert substate_lt(2, 1, saf(0), saf_store(1, 0b01))
        assert substate_lt(2, 1, saf(0b10), saf_undo(1, 0))

    def test_le_order_depends_on_owner(self):
        assert substate_lt(2, 1, le(0b01), le(0b11))
        assert substate_lt(2, 1, le(0b11), le(0b10))
        assert not substate_lt(2, 2, le(0b01), le(0b11))

    def test_product_order(self):
        assert order_lt(state(ES1, LOS1), state(ES2, LOS1))
        assert order_lt(state(ES1, LOS1), state(ES2, LOS2))
        assert not order_lt(state(ES1, LOS1), state(ES1, LOS1))
        assert not order_lt(state(ES1, LOS2), state(ES2, LOS1))

    def test_flags_do_not_matter(self):
        assert order_lt(state(ES1, busy=1), state(ES2))

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_generators_are_acyclic(self, n):
        verdict = check_order_wellfounded(n, reachable_states=lts("impl", n).states if n < 3 else None)
        assert verdict
        assert verdict.edges == sum(len(order_generators(n, p)) for p in range(1, n + 1))

    def test_cycle_is_reported(self):
        verdict = check_order_wellfounded(2, extra_edges=[(ES4, ES1)])
        assert not verdict
        assert verdict.cycle[0] == verdict.cycle[-1]
        assert ES1 in verdict.cycle and ES4 in verdict.cycle


class TestRequirements:
    @pytest.mark.parametrize("n", [1, 2])
    def test_all_requirements_hold(self, n):
        report = check_requirements(model("impl", n), model("spec", n), ALL)
        assert report.all_pass, report.failed()
        assert report.states_checked == lts("impl", n).num_states
        assert set(report.results) == set(REQUIREMENTS)

    def test_requirement_one_directly(self):
        impl = model("impl", 2)
        for d in lts("impl", 2).states:
            if not focus(d):
                assert any(l.kind == INT and order_lt(t, d) for l, t in enabled(impl, d))

    def test_requirement_two_directly(self):
        impl = model("impl", 2)
        for d in lts("impl", 2).states:
            for l, t in enabled(impl, d):
                if l.kind == INT:
                    assert state_mapping(t) == state_mapping(d)

    def test_dropped_saf_loop_fails_cone_labelling(self):
        report = check_requirements(model("impl", 2), model("spec", 2, "drop-spec-improbable-saf"), ALL)
        assert report.failed() == ["IIΔ"]
        assert "SAF" in state_mapping(report["IIΔ"].state)

    def test_swapped_guard_fails_matching(self):
        report = check_requirements(model("impl", 2), model("spec", 2, "swap-es-guard"), ALL)
        assert {"III", "IV"} <= set(report.failed())

    def test_invariant_violation_is_reported(self):
        report = check_requirements(model("impl", 2, "skip-busy-store"), model("spec", 2), ALL)
        assert report.invariant_violation is not None
        assert not report.all_pass

    def test_non_decreasing_focus_witness_fails(self):
        report = check_requirements(model("impl", 2), model("spec", 2), ALL, lt=lambda a, b: False)
        assert "I" in report.failed()
        assert "IVΔ" in report.failed()

    def test_wrong_focus_condition_fails(self):
        report = check_requirements(model("impl", 2), model("spec", 2), ALL, focus_condition=lambda d: True)
        assert "III" in report.failed() or "IIIΔ" in report.failed()


class TestWitnessPath:
    def test_single_writer(self):
        d = state(saf(0), mtx=True)
        path = witness_int_path(d, 1)
        assert [l.name for l, _ in path] == ["store_forbidden_true"]

    def test_reader_in_es_backs_off(self):
        d = state(saf(0), ES1, busy=0b10, mtx=True)
        path = witness_int_path(d, 1)
        assert [l.name for l, _ in path] == [
            "store_forbidden_true", "load_forbidden_true", "store_busy_false", "load_busy_false",
            "store_forbidden_true",
        ]
        assert path[-1][1].subs[1] == ES3

    def test_idle_thread_takes_two_steps(self):
        path = witness_int_path(state(FREE, saf(0), EE, mtx=True), 2)
        assert len(path) == 2 + 2 + 1

    def test_path_is_valid_everywhere(self):
        impl = impl_lpe(2)
        checked = 0
        for d in lts("impl", 2).states:
            if not focus(d):
                continue
            for p in (1, 2):
                if d.subs[p - 1] != saf(0) or ("LOE" in state_mapping(d) or "Shared" in state_mapping(d)):
                    continue
                cur = d
                for label, nxt in witness_int_path(d, p, impl):
                    assert label.kind == INT and (label, nxt) in enabled(impl, cur)
                    assert state_mapping(nxt) == state_mapping(d)
                    cur = nxt
                assert any(l.name == "tau_saf_los" for l, _ in enabled(impl, cur))
                checked += 1
        assert checked == 10

    def test_rejects_non_focus_start(self):
        with pytest.raises(WitnessError, match="focus"):
            witness_int_path(state(saf(0), ES2, mtx=True), 1)

    def test_rejects_thread_not_at_empty_saf(self):
        with pytest.raises(WitnessError, match="SAF"):
            witness_int_path(state(EE, FREE), 1)

    def test_rejects_when_spec_step_is_blocked(self):
        with pytest.raises(WitnessError, match="not enabled"):
            witness_int_path(state(saf(0), SHARED, busy=0b10, mtx=True), 1)
