"""Exact ReLU network compilers: narrow, min-width, bounded-weight and exact rewrites."""

from ._reludeep import (
    Network,
    ParseError,
    PreconditionError,
    StructureError,
    bound_weights,
    compile_minwidth,
    compile_narrow,
    efficiency_report,
    exact_deep,
    exact_depth,
    generate_target,
    verify,
)

__all__ = [
    "Network",
    "ParseError",
    "PreconditionError",
    "StructureError",
    "bound_weights",
    "compile_minwidth",
    "compile_narrow",
    "efficiency_report",
    "exact_deep",
    "exact_depth",
    "generate_target",
    "verify",
]
