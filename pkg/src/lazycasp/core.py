"""Kernel selection: compiled extension when available, pure Python otherwise.

Both kernels implement the same interface (see _pycore for the reference
documentation).  The benchmark in benchmarks/bench_core.py compares them.
"""

try:
    from . import _ckern as _impl

    KERNEL_IMPL = "compiled"
except ImportError:  # pragma: no cover - depends on the build environment
    from . import _pycore as _impl

    KERNEL_IMPL = "pure"

Kernel = _impl.Kernel
UNASSIGNED = _impl.UNASSIGNED
VTRUE = _impl.VTRUE
VFALSE = _impl.VFALSE
STATUS_OK = _impl.STATUS_OK
STATUS_UNIT = _impl.STATUS_UNIT
STATUS_CONFLICT = _impl.STATUS_CONFLICT
STATUS_DISCARDED = _impl.STATUS_DISCARDED
