"""LZSS over RIBN codes with two-byte back-pointers.

Bytes below ``rb`` are literal codes.  A byte ``b1 >= rb`` starts a
back-pointer ``BP = (b1 - rb) * 256 + b2`` copying ``BP % sb + 3`` codes
from ``BP // sb`` codes back.
"""

from __future__ import annotations

from typing import Sequence

from . import _kernels

BYTE_BASE = 256
SIZE_BASES = range(7, 14)
MIN_MATCH = 3


class LzssError(ValueError):
    """Bad parameters or a malformed compressed stream."""


class LzssOffsetError(LzssError):
    pass


class LzssTruncatedError(LzssError):
    pass


class LzssLengthError(LzssError):
    pass


def _check(rb: int, sb: int) -> None:
    if not 1 <= rb < BYTE_BASE:
        raise LzssError(f"rb={rb} leaves no byte values for back-pointers")
    if sb < 1:
        raise LzssError(f"size base {sb} must be positive")


def max_offset(rb: int, sb: int) -> int:
    return ((BYTE_BASE - rb) * BYTE_BASE - 1) // sb


def max_size(sb: int) -> int:
    return sb + 2


def encode_backpointer(offset: int, size: int, rb: int, sb: int) -> tuple[int, int]:
    _check(rb, sb)
    if not MIN_MATCH <= size <= max_size(sb):
        raise LzssError(f"match size {size} outside {MIN_MATCH}..{max_size(sb)}")
    if not 0 < offset <= max_offset(rb, sb):
        raise LzssError(f"offset {offset} outside 1..{max_offset(rb, sb)}")
    bp = offset * sb + size - MIN_MATCH
    b1, b2 = divmod(bp, BYTE_BASE)
    if rb + b1 > 255:
        raise LzssError(f"back-pointer ({offset}, {size}) does not fit in two bytes")
    return rb + b1, b2


def decode_backpointer(b1: int, b2: int, rb: int, sb: int) -> tuple[int, int]:
    """(offset, size) for a back-pointer."""
    bp = (b1 - rb) * BYTE_BASE + b2
    return bp // sb, bp % sb + MIN_MATCH


def compress_with(codes: Sequence[int], rb: int, sb: int) -> bytes:
    _check(rb, sb)
    data = bytes(codes)
    if any(c >= rb for c in data):
        raise LzssError(f"code >= rb={rb} cannot be a literal")
    return _kernels.lzss_compress(data, rb, sb)


def compress(codes: Sequence[int], rb: int) -> tuple[bytes, int]:
    """Best greedy result over the size bases 7..13; ties keep the smaller sb."""
    best: tuple[bytes, int] | None = None
    for sb in SIZE_BASES:
        out = compress_with(codes, rb, sb)
        if best is None or len(out) < len(best[0]):
            best = (out, sb)
    assert best is not None
    return best


def decompressed_length(data: bytes, rb: int, sb: int) -> int:
    """Number of codes ``data`` expands to, without building them."""
    n = i = 0
    while i < len(data):
        if data[i] < rb:
            n += 1
            i += 1
        else:
            b2 = data[i + 1] if i + 1 < len(data) else 0
            n += ((data[i] - rb) * BYTE_BASE + b2) % sb + MIN_MATCH
            i += 2
    return n


def decompress(data: bytes, rb: int, sb: int, expected: int) -> list[int]:
    _check(rb, sb)
    status, out = _kernels.lzss_decompress(bytes(data), rb, sb, expected)
    if status == 1:
        raise LzssOffsetError(f"back-pointer reaches before the start (after {len(out)} codes)")
    if status == 2:
        raise LzssTruncatedError("stream ends inside a back-pointer")
    if status == 3:
        raise LzssLengthError(f"decompressed length differs from the declared {expected}")
    return list(out)
