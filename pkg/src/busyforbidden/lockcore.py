"""An executable busy-forbidden readers-writer lock and a stress harness for it.

Slots are caller-provided indices ``0..slots-1``.  Flag stores and loads are
single list-element assignments and reads, which CPython executes atomically
and in program order under the interpreter lock; that gives the sequentially
consistent interleaving semantics the models assume.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

IDLE, SHARED, EXCLUSIVE = "idle", "shared", "exclusive"


class LockUsageError(RuntimeError):
    """A slot used the lock out of protocol (re-entry or leaving a section it does not hold)."""


class LockAborted(RuntimeError):
    """Raised inside a waiting operation after :meth:`BusyForbiddenLock.abort`."""


@dataclass(frozen=True)
class ChaosPolicy:
    """Seeded source of the two ``sometimes`` branches and the timed-lock timeout.

    ``enter_undo`` is the chance that a writer undoes a forbidden flag it just
    set although the reader is not busy; ``leave_reset`` is the chance that a
    leaving writer sets a flag back to true instead of clearing it.
    """

    seed: int = 0
    enter_undo: float = 1 / 16
    leave_reset: float = 1 / 16
    timeout: float = 0.001

    def __post_init__(self):
        for name in ("enter_undo", "leave_reset"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {value}")
        if self.timeout <= 0:
            raise ValueError(f"timeout must be positive, got {self.timeout}")

    def rng(self, slot: int) -> random.Random:
        return random.Random(f"{self.seed}:{slot}")


Observer = Callable[[str, int, Optional[int]], None]


class BusyForbiddenLock:
    """Readers-writer lock built from a busy and a forbidden flag per slot and one mutex.

    ``observer``, when given, is called as ``observer(event, slot, target)`` on
    every flag access and mutex operation; events are ``store_busy``,
    ``load_forbidden``, ``store_forbidden_true``, ``store_forbidden_false``,
    ``load_busy``, ``timed_lock``, ``lock`` and ``unlock``.
    """

    def __init__(self, slots: int, chaos: Optional[ChaosPolicy] = None, *, checked: bool = True,
                 observer: Optional[Observer] = None):
        if slots < 1:
            raise ValueError(f"slots must be at least 1, got {slots}")
        self.slots = slots
        self.chaos = chaos if chaos is not None else ChaosPolicy()
        self.checked = checked
        self.busy = [False] * slots
        self.forbidden = [False] * slots
        self._mutex = threading.Lock()
        self._rngs = [self.chaos.rng(s) for s in range(slots)]
        self._held = [IDLE] * slots
        self._abort = threading.Event()
        self._observer = observer

    # -- helpers -----------------------------------------------------------

    def _emit(self, event: str, slot: int, target: Optional[int] = None) -> None:
        if self._observer is not None:
            self._observer(event, slot, target)

    def _check_slot(self, slot: int) -> None:
        if not 0 <= slot < self.slots:
            raise LockUsageError(f"slot {slot} out of range 0..{self.slots - 1}")

    def _transition(self, slot: int, expect: str, to: str, op: str) -> None:
        self._check_slot(slot)
        if self.checked and self._held[slot] != expect:
            raise LockUsageError(f"{op} by slot {slot} while {self._held[slot]}")
        self._held[slot] = to

    def _check_abort(self) -> None:
        if self._abort.is_set():
            raise LockAborted("lock aborted")

    def _sometimes(self, slot: int, probability: float) -> bool:
        return probability > 0 and self._rngs[slot].random() < probability

    def _lock_mutex(self, slot: int) -> None:
        self._emit("lock", slot)
        # Blocking acquire, but in slices so that abort() can release waiters.
        while not self._mutex.acquire(timeout=0.05):
            self._check_abort()

    def _unlock_mutex(self, slot: int) -> None:
        self._emit("unlock", slot)
        self._mutex.release()

    def abort(self) -> None:
        """Make every waiting operation raise :class:`LockAborted`."""
        self._abort.set()

    def holding(self, slot: int) -> str:
        return self._held[slot]

    # -- readers -----------------------------------------------------------

    def enter_shared(self, slot: int) -> None:
        self._check_slot(slot)
        if self.checked and self._held[slot] != IDLE:
            raise LockUsageError(f"enter_shared by slot {slot} while {self._held[slot]}")
        self._emit("store_busy", slot, slot)
        self.busy[slot] = True
        while True:
            self._emit("load_forbidden", slot, slot)
            if not self.forbidden[slot]:
                break
            self._check_abort()
            self._emit("store_busy", slot, slot)
            self.busy[slot] = False
            self._emit("timed_lock", slot)
            if self._mutex.acquire(timeout=self.chaos.timeout):
                self._mutex.release()
            else:
                time.sleep(0)
            self._emit("store_busy", slot, slot)
            self.busy[slot] = True
        self._held[slot] = SHARED

    def leave_shared(self, slot: int) -> None:
        self._transition(slot, SHARED, IDLE, "leave_shared")
        self._emit("store_busy", slot, slot)
        self.busy[slot] = False

    # -- writers -----------------------------------------------------------

    def enter_exclusive(self, slot: int) -> None:
        self._check_slot(slot)
        if self.checked and self._held[slot] != IDLE:
            raise LockUsageError(f"enter_exclusive by slot {slot} while {self._held[slot]}")
        self._lock_mutex(slot)
        try:
            undo = self.chaos.enter_undo
            while True:
                pending = [r for r in range(self.slots) if not self.forbidden[r]]
                if not pending:
                    break
                retreated = False
                for r in pending:
                    self._emit("store_forbidden_true", slot, r)
                    self.forbidden[r] = True
                    self._emit("load_busy", slot, r)
                    if self.busy[r] or self._sometimes(slot, undo):
                        self._emit("store_forbidden_false", slot, r)
                        self.forbidden[r] = False
                        retreated = True
                if retreated:
                    self._check_abort()
                    time.sleep(0)
        except BaseException:
            for r in range(self.slots):
                self.forbidden[r] = False
            self._unlock_mutex(slot)
            raise
        self._held[slot] = EXCLUSIVE

    def leave_exclusive(self, slot: int) -> None:
        self._transition(slot, EXCLUSIVE, IDLE, "leave_exclusive")
        reset = self.chaos.leave_reset
        while True:
            pending = [r for r in range(self.slots) if self.forbidden[r]]
            if not pending:
                break
            for r in pending:
                if self._sometimes(slot, reset):
                    self._emit("store_forbidden_true", slot, r)
                    self.forbidden[r] = True
                else:
                    self._emit("store_forbidden_false", slot, r)
                    self.forbidden[r] = False
        self._release_after_leave(slot)

    def _release_after_leave(self, slot: int) -> None:
        self._unlock_mutex(slot)

    # -- context managers --------------------------------------------------

    def shared(self, slot: int) -> "_Section":
        return _Section(self.enter_shared, self.leave_shared, slot)

    def exclusive(self, slot: int) -> "_Section":
        return _Section(self.enter_exclusive, self.leave_exclusive, slot)


class _Section:
    def __init__(self, enter, leave, slot):
        self._enter, self._leave, self._slot = enter, leave, slot

    def __enter__(self):
        self._enter(self._slot)
        return self

    def __exit__(self, *exc):
        self._leave(self._slot)
        return False


# ---------------------------------------------------------------------------
# Stress harness


@dataclass
class StressReport:
    slots: int
    readers: int
    writers: int
    ops_per_worker: int
    seed: int
    ops_completed: list = field(default_factory=list)
    max_concurrent_readers: int = 0
    writer_overlap_violations: int = 0
    reader_writer_violations: int = 0
    timed_out: bool = False
    elapsed: float = 0.0
    errors: list = field(default_factory=list)

    @property
    def violations(self) -> int:
        return self.writer_overlap_violations + self.reader_writer_violations

    @property
    def ok(self) -> bool:
        return self.violations == 0 and not self.timed_out and not self.errors

    def lines(self) -> list:
        """``key=value`` lines describing the run."""
        return [
            f"slots={self.slots}",
            f"readers={self.readers}",
            f"writers={self.writers}",
            f"ops_per_worker={self.ops_per_worker}",
            f"seed={self.seed}",
            f"ops_completed={','.join(map(str, self.ops_completed))}",
            f"max_concurrent_readers={self.max_concurrent_readers}",
            f"writer_overlap_violations={self.writer_overlap_violations}",
            f"reader_writer_violations={self.reader_writer_violations}",
            f"timed_out={str(self.timed_out).lower()}",
            f"errors={len(self.errors)}",
            f"elapsed={self.elapsed:.3f}",
        ]


class _Monitor:
    """Counts active readers and writers and records every exclusion violation."""

    def __init__(self, report: StressReport):
        self._guard = threading.Lock()
        self.readers = 0
        self.writers = 0
        self.report = report

    def enter(self, writer: bool) -> None:
        with self._guard:
            if writer:
                self.writers += 1
            else:
                self.readers += 1
            r = self.report
            if self.writers > 1:
                r.writer_overlap_violations += 1
            if self.readers > 0 and self.writers > 0:
                r.reader_writer_violations += 1
            r.max_concurrent_readers = max(r.max_concurrent_readers, self.readers)

    def leave(self, writer: bool) -> None:
        with self._guard:
            if writer:
                self.writers -= 1
            else:
                self.readers -= 1


def run_stress(
    slots: int,
    readers: int,
    writers: int,
    ops_per_worker: int,
    seed: int,
    *,
    chaos: Optional[ChaosPolicy] = None,
    lock_factory: Optional[Callable[[int, ChaosPolicy], BusyForbiddenLock]] = None,
    timeout: float = 60.0,
) -> StressReport:
    """Run ``readers`` reader and ``writers`` writer workers against one lock.

    Readers take slots ``0..readers-1`` and writers the following ones.  When
    the workers have not finished after ``timeout`` seconds the lock is aborted
    and the report is marked ``timed_out``.
    """
    if min(slots, ops_per_worker) < 1 or min(readers, writers) < 0:
        raise ValueError("slots and ops_per_worker must be positive, worker counts non-negative")
    if readers + writers > slots:
        raise ValueError(f"{readers + writers} workers need more than {slots} slots")
    if chaos is None:
        chaos = ChaosPolicy(seed=seed)
    lock = (lock_factory or BusyForbiddenLock)(slots, chaos)
    report = StressReport(slots, readers, writers, ops_per_worker, seed,
                          ops_completed=[0] * slots)
    monitor = _Monitor(report)
    start = threading.Barrier(readers + writers + 1)

    def worker(slot: int, writer: bool) -> None:
        enter = lock.enter_exclusive if writer else lock.enter_shared
        leave = lock.leave_exclusive if writer else lock.leave_shared
        try:
            start.wait()
            for _ in range(ops_per_worker):
                enter(slot)
                monitor.enter(writer)
                time.sleep(0)  # give other workers a chance to overlap
                monitor.leave(writer)
                leave(slot)
                report.ops_completed[slot] += 1
        except LockAborted:
            pass
        except Exception as exc:  # recorded, the harness keeps going
            report.errors.append(f"slot {slot}: {exc!r}")
            lock.abort()

    threads = [threading.Thread(target=worker, args=(s, s >= readers), daemon=True,
                                name=f"stress-{s}")
               for s in range(readers + writers)]
    for t in threads:
        t.start()
    t0 = time.monotonic()
    start.wait()
    deadline = t0 + timeout
    for t in threads:
        t.join(max(0.0, deadline - time.monotonic()))
    if any(t.is_alive() for t in threads):
        report.timed_out = True
        lock.abort()
        for t in threads:
            t.join(1.0)
    report.elapsed = time.monotonic() - t0
    return report
