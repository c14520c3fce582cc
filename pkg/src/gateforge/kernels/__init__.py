"""Numeric inner loops with two interchangeable implementations.

``_core`` is a compiled Cython extension; ``_fallback`` is pure numpy with
identical semantics.  The compiled backend is preferred when importable.
Set ``GATEFORGE_KERNELS=fallback`` (or ``compiled``) to force a choice; the
active one is reported in :data:`BACKEND`.

Fixed-point entry points are bit-exact across backends; float entry points
agree to rounding error (the extension is compiled without FMA contraction,
so in practice they match closely).
"""

import os

_forced = os.environ.get("GATEFORGE_KERNELS")
if _forced not in (None, "", "compiled", "fallback"):
    raise ImportError(
        f"GATEFORGE_KERNELS={_forced!r}: expected 'compiled' or 'fallback'"
    )

if _forced == "fallback":
    from . import _fallback as _impl

    BACKEND = "fallback"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        from . import _fallback as _impl

        BACKEND = "fallback"

apply_kernel_inplace = _impl.apply_kernel_inplace
trace_compensated = _impl.trace_compensated
dot_trace = _impl.dot_trace
fx_apply_kernel_inplace = _impl.fx_apply_kernel_inplace
fx_trace = _impl.fx_trace

__all__ = [
    "BACKEND",
    "apply_kernel_inplace",
    "trace_compensated",
    "dot_trace",
    "fx_apply_kernel_inplace",
    "fx_trace",
]
