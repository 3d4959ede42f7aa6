"""Deliberately broken model variants used as negative tests."""

from __future__ import annotations

from ..lpe import Lpe
from .impl import impl_lpe
from .spec import spec_lpe

# mutation id -> model it applies to
MUTATIONS = {
    "drop-spec-improbable-saf": "spec",
    "drop-spec-improbable-le": "spec",
    "drop-spec-improbable-es": "spec",
    "skip-busy-store": "impl",
    "swap-es-guard": "spec",
}


def mutation_target(name: str) -> str:
    try:
        return MUTATIONS[name]
    except KeyError:
        raise ValueError(f"unknown mutation {name!r}; valid mutations: {', '.join(MUTATIONS)}") from None


def mutate(model: str, n: int, name: str) -> Lpe:
    """Return ``model`` (``"impl"`` or ``"spec"``) for ``n`` threads with mutation ``name``."""
    target = mutation_target(name)
    if model not in ("impl", "spec"):
        raise ValueError(f"unknown model {model!r}")
    if model != target:
        raise ValueError(f"mutation {name!r} applies to the {target} model, not {model}")
    label = f"{model}(N={n})+{name}"
    if name == "skip-busy-store":
        return impl_lpe(n, set_busy_in_es2=False).replacing(name=label)
    spec = spec_lpe(n)
    if name.startswith("drop-spec-improbable-"):
        return spec.without("improbable_" + name.rsplit("-", 1)[1], name=label)
    # swap-es-guard: the ES loop and the ES -> LOE step trade guards
    loop, step = spec.summand("improbable_es"), spec.summand("tau_es_loe")
    return spec.replacing(
        loop.__class__(loop.id, step.guard, loop.label, loop.next, loop.domain),
        step.__class__(step.id, loop.guard, step.label, step.next, step.domain),
        name=label,
    )
