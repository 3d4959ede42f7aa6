"""Concrete LPEs of the busy-forbidden implementation and its external behaviour."""

from .impl import CALL_RETURN_NAMES, TAU_VISIBLE_NAMES, impl_lpe
from .invariants import (
    Flags,
    InconsistentSubstates,
    all_invariants,
    derive_flags,
    flags_match,
    invariant_pred,
)
from .mutations import MUTATIONS, mutate, mutation_target
from .spec import spec_lpe
from .states import (
    SPEC_NODES,
    ImplState,
    Substate,
    decode_impl,
    decode_spec,
    encode_impl,
    encode_spec,
)

__all__ = [
    "CALL_RETURN_NAMES",
    "Flags",
    "ImplState",
    "InconsistentSubstates",
    "MUTATIONS",
    "SPEC_NODES",
    "Substate",
    "TAU_VISIBLE_NAMES",
    "all_invariants",
    "decode_impl",
    "decode_spec",
    "derive_flags",
    "encode_impl",
    "encode_spec",
    "flags_match",
    "impl_lpe",
    "invariant_pred",
    "mutate",
    "mutation_target",
    "spec_lpe",
]
