"""Command-line entry point: model checks, ``.aut`` export and the lock stress harness."""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass
from typing import Optional, Sequence

from . import bisim, conesfoci
from .aut import export_aut
from .lockcore import ChaosPolicy, run_stress
from .lpe import LpeError, StateLimitExceeded, check_invariant, explore, format_label
from .models import MUTATIONS, encode_impl, encode_spec, impl_lpe, invariant_pred, mutate, spec_lpe

CHECKS = ("invariants", "bisim", "branching", "conesfoci")
ALL_CHECKS = ("invariants", "bisim", "conesfoci")
DEFAULT_LIMIT = 5_000_000

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


@dataclass
class RunConfig:
    threads: int = 2
    check: str = "all"
    mutation: Optional[str] = None
    hide: frozenset = bisim.STANDARD_HIDE
    limit: int = DEFAULT_LIMIT
    export_aut: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.threads < 1:
            raise ValueError("--threads must be at least 1")
        if self.limit < 1:
            raise ValueError("--limit must be at least 1")
        if self.check not in CHECKS + ("all",):
            raise ValueError(f"unknown check {self.check!r}")
        if self.mutation is not None and self.mutation not in MUTATIONS:
            raise ValueError(f"unknown mutation {self.mutation!r}")

    @property
    def checks(self) -> tuple:
        return ALL_CHECKS if self.check == "all" else (self.check,)


def parse_hide(text: str) -> frozenset:
    if text == "standard":
        return bisim.STANDARD_HIDE
    if text == "none":
        return frozenset()
    names = frozenset(x.strip() for x in text.split(",") if x.strip())
    if not names:
        raise ValueError("--hide list is empty")
    return names


class Runner:
    """Builds the models once and runs the selected checks, writing a report to ``out``."""

    def __init__(self, config: RunConfig, out=None):
        self.config = config
        self.out = out if out is not None else sys.stdout
        n = config.threads
        m = config.mutation
        target = MUTATIONS.get(m) if m else None
        self.impl = mutate("impl", n, m) if target == "impl" else impl_lpe(n)
        self.spec = mutate("spec", n, m) if target == "spec" else spec_lpe(n)
        self._lts = {}

    def say(self, text: str = "") -> None:
        print(text, file=self.out)

    def lts(self, which: str):
        if which not in self._lts:
            lpe = self.impl if which == "impl" else self.spec
            self._lts[which] = explore(lpe, self.config.limit)
        return self._lts[which]

    def verdict(self, name: str, ok: bool, elapsed: float, detail: str) -> bool:
        self.say(f"{name:<11} {'PASS' if ok else 'FAIL'}  {detail}  ({elapsed:.2f}s)")
        return ok

    def check_invariants(self) -> bool:
        t0 = time.perf_counter()
        v = check_invariant(self.impl, invariant_pred("all"), self.config.limit)
        detail = f"states={v.states_checked}"
        if not v.holds:
            detail += f" violated at {encode_impl(v.state)}"
            if v.label is not None:
                detail += f" after {format_label(v.label)} -> {encode_impl(v.successor)}"
        return self.verdict("invariants", v.holds, time.perf_counter() - t0, detail)

    def _equivalence(self, name: str, fn) -> bool:
        t0 = time.perf_counter()
        a = bisim.hide(self.lts("impl"), self.config.hide)
        b = bisim.hide(self.lts("spec"), self.config.hide)
        v = fn(a, b)
        detail = f"impl={a.num_states}/{a.num_transitions} spec={b.num_states}/{b.num_transitions} blocks={v.blocks}"
        ok = self.verdict(name, v.equivalent, time.perf_counter() - t0, detail)
        if not ok:
            s, t = v.pair
            self.say(f"  counterexample impl {encode_impl(a.states[s])} / spec {encode_spec(b.states[t])}")
            self.say(f"  trace: {' . '.join(v.trace) if v.trace else '(initial states)'}")
            self.say(f"  reason: {v.reason}")
        return ok

    def check_bisim(self) -> bool:
        return self._equivalence("bisim", bisim.dpbb)

    def check_branching(self) -> bool:
        return self._equivalence("branching", bisim.branching_bisim)

    def check_conesfoci(self) -> bool:
        t0 = time.perf_counter()
        order = conesfoci.check_order_wellfounded(self.config.threads)
        report = conesfoci.check_requirements(self.impl, self.spec, invariant_pred("all"), self.config.limit)
        ok = report.all_pass and order.ok
        failed = report.failed()
        detail = f"states={report.states_checked} requirements={len(conesfoci.REQUIREMENTS) - len(failed)}/10"
        self.verdict("conesfoci", ok, time.perf_counter() - t0, detail)
        if not order.ok:
            self.say(f"  order has a cycle: {order.detail}")
        if not report.initial_ok:
            self.say("  h maps the initial state elsewhere")
        if report.invariant_violation is not None:
            self.say(f"  invariant violated at {encode_impl(report.invariant_violation)}")
        for name in failed:
            r = report[name]
            self.say(f"  {name}: {r.detail} at {encode_impl(r.state)}")
        return ok

    def run(self) -> int:
        c = self.config
        self.say(f"busy-forbidden N={c.threads} mutation={c.mutation or 'none'} seed={c.seed}")
        if c.export_aut:
            count = export_aut(self.lts("impl"), c.export_aut)
            self.say(f"exported {count} transitions to {c.export_aut}")
        ok = True
        for name in c.checks:
            ok = getattr(self, f"check_{name}")() and ok
        self.say("result: " + ("PASS" if ok else "FAIL"))
        return EXIT_OK if ok else EXIT_FAIL


def run(config: RunConfig, out=None) -> int:
    return Runner(config, out).run()


def _positive(text: str) -> int:
    value = int(text.replace("_", ""))
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _probability(text: str) -> float:
    value = float(text)
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError("must be in [0, 1)")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="busyforbidden",
        description="Check the busy-forbidden lock models or stress the executable lock.",
    )
    parser.add_argument("--threads", type=_positive, default=2, help="number of threads N (default 2)")
    parser.add_argument("--check", choices=CHECKS + ("all",), default="all",
                        help="check to run; 'all' runs invariants, bisim and conesfoci")
    parser.add_argument("--mutate", choices=sorted(MUTATIONS), help="run against a broken model variant")
    parser.add_argument("--hide", default="standard",
                        help="labels hidden for bisimulation: standard, none or a comma list (*int* = all Int)")
    parser.add_argument("--limit", type=_positive, default=DEFAULT_LIMIT, help="state limit for exploration")
    parser.add_argument("--export-aut", metavar="PATH", help="write the implementation LTS in .aut format")
    parser.add_argument("--seed", type=int, default=0, help="seed recorded in the report")

    sub = parser.add_subparsers(dest="command")
    stress = sub.add_parser("stress", help="run the concurrent lock stress harness")
    stress.add_argument("--slots", type=_positive, default=8)
    stress.add_argument("--readers", type=int, default=6)
    stress.add_argument("--writers", type=int, default=2)
    stress.add_argument("--ops", type=_positive, default=10_000, help="enter/leave cycles per worker")
    stress.add_argument("--seed", type=int, default=42, dest="stress_seed")
    stress.add_argument("--timeout", type=float, default=60.0, help="harness timeout in seconds")
    stress.add_argument("--enter-undo", type=_probability, default=1 / 16)
    stress.add_argument("--leave-reset", type=_probability, default=1 / 16)
    stress.add_argument("--kv", action="store_true", help="print key=value lines instead of the text block")
    return parser


def run_stress_command(args, out=None) -> int:
    out = out if out is not None else sys.stdout
    chaos = ChaosPolicy(args.stress_seed, args.enter_undo, args.leave_reset)
    report = run_stress(args.slots, args.readers, args.writers, args.ops, args.stress_seed,
                        chaos=chaos, timeout=args.timeout)
    if args.kv:
        for line in report.lines():
            print(line, file=out)
    else:
        print(f"stress slots={report.slots} readers={report.readers} writers={report.writers} "
              f"ops={report.ops_per_worker} seed={report.seed}", file=out)
        print(f"  ops completed          {sum(report.ops_completed)}", file=out)
        print(f"  max concurrent readers {report.max_concurrent_readers}", file=out)
        print(f"  writer overlaps        {report.writer_overlap_violations}", file=out)
        print(f"  reader/writer overlaps {report.reader_writer_violations}", file=out)
        print(f"  timed out              {'yes' if report.timed_out else 'no'}", file=out)
        print(f"  elapsed                {report.elapsed:.2f}s", file=out)
        for err in report.errors:
            print(f"  error: {err}", file=out)
        print("result: " + ("PASS" if report.ok else "FAIL"), file=out)
    return EXIT_OK if report.ok else EXIT_FAIL


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "stress":
            return run_stress_command(args)
        config = RunConfig(args.threads, args.check, args.mutate, parse_hide(args.hide),
                           args.limit, args.export_aut, args.seed)
        return run(config)
    except StateLimitExceeded as exc:
        print(f"error: state space exceeds the limit of {exc.limit} states; raise --limit", file=sys.stderr)
    except (LpeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
