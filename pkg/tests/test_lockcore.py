import threading
import time

import pytest

from busyforbidden.lockcore import (
    IDLE,
    BusyForbiddenLock,
    ChaosPolicy,
    LockAborted,
    LockUsageError,
    run_stress,
)

CALM = ChaosPolicy(seed=0, enter_undo=0.0, leave_reset=0.0)


class Recorder:
    def __init__(self):
        self.events = []

    def __call__(self, event, slot, target):
        self.events.append((event, slot, target))


def started(fn, *args):
    done = threading.Event()

    def body():
        fn(*args)
        done.set()

    threading.Thread(target=body, daemon=True).start()
    return done


class TestChaosPolicy:
    @pytest.mark.parametrize("field", ["enter_undo", "leave_reset"])
    @pytest.mark.parametrize("value", [1.0, -0.1])
    def test_probability_must_be_below_one(self, field, value):
        with pytest.raises(ValueError):
            ChaosPolicy(**{field: value})

    def test_timeout_must_be_positive(self):
        with pytest.raises(ValueError):
            ChaosPolicy(timeout=0)

    def test_rng_depends_on_seed_and_slot(self):
        a, b = ChaosPolicy(seed=7), ChaosPolicy(seed=7)
        assert a.rng(1).random() == b.rng(1).random()
        assert a.rng(1).random() != a.rng(2).random()


class TestSingleThread:
    def test_uncontended_reader(self):
        rec = Recorder()
        lock = BusyForbiddenLock(2, CALM, observer=rec)
        lock.enter_shared(0)
        assert rec.events == [("store_busy", 0, 0), ("load_forbidden", 0, 0)]
        lock.leave_shared(0)
        assert lock.busy == [False, False] and lock.holding(0) == IDLE

    def test_calm_writer_stores_each_flag_once(self):
        rec = Recorder()
        lock = BusyForbiddenLock(3, CALM, observer=rec)
        lock.enter_exclusive(1)
        stores = [t for e, _, t in rec.events if e == "store_forbidden_true"]
        assert sorted(stores) == [0, 1, 2]
        assert lock.forbidden == [True] * 3
        rec.events.clear()
        lock.leave_exclusive(1)
        clears = [t for e, _, t in rec.events if e == "store_forbidden_false"]
        assert sorted(clears) == [0, 1, 2]
        assert rec.events[-1][0] == "unlock"
        assert lock.forbidden == [False] * 3

    def test_chaos_trace_is_reproducible(self):
        def trace():
            rec = Recorder()
            lock = BusyForbiddenLock(4, ChaosPolicy(seed=3, enter_undo=0.5, leave_reset=0.5), observer=rec)
            for _ in range(5):
                lock.enter_exclusive(0)
                lock.leave_exclusive(0)
            return rec.events

        first = trace()
        assert first == trace()
        assert sum(1 for e, _, _ in first if e == "store_forbidden_false") > 4 * 5

    def test_context_managers(self):
        lock = BusyForbiddenLock(2, CALM)
        with lock.shared(0):
            assert lock.busy[0]
        with lock.exclusive(1):
            assert all(lock.forbidden)
        assert lock.holding(0) == lock.holding(1) == IDLE


class TestContract:
    def test_reentrant_reader(self):
        lock = BusyForbiddenLock(1, CALM)
        lock.enter_shared(0)
        with pytest.raises(LockUsageError):
            lock.enter_shared(0)
        with pytest.raises(LockUsageError):
            lock.enter_exclusive(0)

    def test_leaving_without_holding(self):
        lock = BusyForbiddenLock(1, CALM)
        with pytest.raises(LockUsageError):
            lock.leave_shared(0)
        with pytest.raises(LockUsageError):
            lock.leave_exclusive(0)

    def test_wrong_leave(self):
        lock = BusyForbiddenLock(1, CALM)
        lock.enter_exclusive(0)
        with pytest.raises(LockUsageError):
            lock.leave_shared(0)

    def test_slot_range(self):
        with pytest.raises(LockUsageError):
            BusyForbiddenLock(2, CALM).enter_shared(2)
        with pytest.raises(ValueError):
            BusyForbiddenLock(0)


class TestBlocking:
    def test_reader_waits_for_writer(self):
        lock = BusyForbiddenLock(2, CALM)
        lock.enter_exclusive(0)
        done = started(lock.enter_shared, 1)
        assert not done.wait(0.2)
        lock.leave_exclusive(0)
        assert done.wait(5)

    def test_writer_waits_for_reader(self):
        lock = BusyForbiddenLock(2, CALM)
        lock.enter_shared(0)
        done = started(lock.enter_exclusive, 1)
        assert not done.wait(0.2)
        lock.leave_shared(0)
        assert done.wait(5)
        lock.leave_exclusive(1)

    def test_second_writer_waits_on_mutex(self):
        lock = BusyForbiddenLock(2, CALM)
        lock.enter_exclusive(0)
        done = started(lock.enter_exclusive, 1)
        assert not done.wait(0.2)
        lock.leave_exclusive(0)
        assert done.wait(5)

    def test_abort_releases_a_waiting_writer(self):
        lock = BusyForbiddenLock(2, CALM)
        lock.enter_exclusive(0)
        errors = []

        def body():
            try:
                lock.enter_exclusive(1)
            except LockAborted as exc:
                errors.append(exc)

        t = threading.Thread(target=body, daemon=True)
        t.start()
        time.sleep(0.1)
        lock.abort()
        t.join(5)
        assert not t.is_alive() and errors


class _NeverUnlocks(BusyForbiddenLock):
    def _release_after_leave(self, slot):
        pass


class _IgnoresFlags(BusyForbiddenLock):
    def enter_shared(self, slot):
        self._held[slot] = "shared"


class TestStress:
    def test_single_reader(self):
        report = run_stress(1, 1, 0, 100, seed=5)
        assert report.ok and report.max_concurrent_readers == 1
        assert report.ops_completed == [100]

    def test_readers_only(self):
        report = run_stress(8, 8, 0, 500, seed=1)
        assert report.ok and sum(report.ops_completed) == 4000

    def test_mixed_workload(self):
        report = run_stress(6, 4, 2, 1000, seed=9)
        assert report.ok
        assert report.violations == 0

    def test_missing_unlock_deadlocks(self):
        report = run_stress(4, 2, 2, 50, seed=1, lock_factory=_NeverUnlocks, timeout=2)
        assert report.timed_out and not report.ok

    def test_monitor_catches_a_broken_reader_path(self):
        report = run_stress(4, 3, 1, 2000, seed=1, lock_factory=_IgnoresFlags, timeout=20)
        assert report.reader_writer_violations > 0

    def test_too_many_workers(self):
        with pytest.raises(ValueError):
            run_stress(2, 2, 1, 10, seed=0)

    def test_report_lines(self):
        lines = run_stress(2, 1, 1, 10, seed=0).lines()
        keys = [line.split("=", 1)[0] for line in lines]
        assert "writer_overlap_violations" in keys and "reader_writer_violations" in keys
