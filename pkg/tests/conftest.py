import functools
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from busyforbidden.bisim import STANDARD_HIDE, hide
from busyforbidden.lpe import explore
from busyforbidden.models import MUTATIONS, impl_lpe, mutate, spec_lpe


@functools.lru_cache(maxsize=None)
def model(kind, n, mutation=None):
    """``impl`` or ``spec`` LPE for ``n`` threads, mutated when the mutation targets it."""
    if mutation is not None and MUTATIONS[mutation] == kind:
        return mutate(kind, n, mutation)
    return impl_lpe(n) if kind == "impl" else spec_lpe(n)


@functools.lru_cache(maxsize=None)
def lts(kind, n, mutation=None):
    return explore(model(kind, n, mutation))


@functools.lru_cache(maxsize=None)
def hidden_pair(n, mutation=None):
    return hide(lts("impl", n, mutation), STANDARD_HIDE), hide(lts("spec", n, mutation), STANDARD_HIDE)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
