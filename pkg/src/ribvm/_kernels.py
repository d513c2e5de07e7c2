"""Selects the compiled kernels when available, else the pure-Python ones.

Set ``RIBVM_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("RIBVM_PURE") == "1":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _pykernels

BACKEND: str = _impl.BACKEND
HALT, EXIT, GROW, ERROR = _pykernels.HALT, _pykernels.EXIT, _pykernels.GROW, _pykernels.ERROR
PRIM_ARITY = _pykernels.PRIM_ARITY


def gc_mark_sweep(f0, f1, f2, state, size, roots):
    return _impl.gc_mark_sweep(f0, f1, f2, state, size, roots)


def execute(machine):
    return _impl.execute(machine)


def lzss_compress(data: bytes, rb: int, sb: int) -> bytes:
    return _impl.lzss_compress(data, rb, sb)


def lzss_decompress(data: bytes, rb: int, sb: int, expected: int) -> tuple[int, bytes]:
    return _impl.lzss_decompress(data, rb, sb, expected)


def use_backend(name: str) -> None:
    """Switch backends at runtime ("python" or "cython"); used by tests and benchmarks."""
    global _impl, BACKEND
    if name == "python":
        _impl = _pykernels
    else:
        from . import _ckernels
        _impl = _ckernels
    BACKEND = _impl.BACKEND
