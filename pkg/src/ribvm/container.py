"""The standalone RIBN file format.

Layout::

    "RVM1" flags rb [sb] [19 table sizes] [primitive map] length(4, LE) payload

Flags: bit0 LZSS, bit1 table present, bit2 arity check, bit3 primitives
without arity, bit4 primitive map present.  Integers in the optional
sections are base-128, most significant group first, high bit set on every
byte but the last.  A compressed payload starts with the decompressed
length in the same format.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from . import lzss
from .encoding import ENTRIES, EncodingTable, original_table

MAGIC = b"RVM1"
F_LZSS, F_TABLE, F_ARITY, F_PNA, F_PRIMS = 1, 2, 4, 8, 16
KNOWN_FLAGS = F_LZSS | F_TABLE | F_ARITY | F_PNA | F_PRIMS


class ContainerError(ValueError):
    pass


class TrailingBytes(ContainerError):
    pass


def vlq128_encode(n: int) -> bytes:
    if n < 0:
        raise ValueError("negative length")
    groups = [n & 127]
    n >>= 7
    while n:
        groups.append(128 | (n & 127))
        n >>= 7
    return bytes(reversed(groups))


def vlq128_decode(data: bytes, pos: int) -> tuple[int, int]:
    n = 0
    for _ in range(10):
        if pos >= len(data):
            raise ContainerError("truncated integer")
        b = data[pos]
        pos += 1
        n = (n << 7) | (b & 127)
        if b < 128:
            return n, pos
    raise ContainerError("integer too long")


@dataclass
class Container:
    rb: int
    codes: list[int]               # symbol section followed by instruction codes
    table: EncodingTable | None = None   # None: the original table
    lzss: bool = False
    sb: int | None = None
    arity_check: bool = False
    prim_no_arity: bool = False
    prim_map: list[int] | None = None
    compressed_size: int | None = field(default=None, compare=False)
    packed: bytes | None = field(default=None, compare=False, repr=False)   # LZSS output

    @property
    def encoding_table(self) -> EncodingTable:
        return self.table if self.table is not None else original_table()


def emit_container(c: Container) -> bytes:
    if not 2 <= c.rb <= 256:
        raise ContainerError(f"rb={c.rb} outside 2..256")
    if any(not 0 <= x < c.rb for x in c.codes):
        raise ContainerError("code outside 0..rb-1")
    flags = ((F_LZSS if c.lzss else 0) | (F_TABLE if c.table is not None else 0)
             | (F_ARITY if c.arity_check else 0) | (F_PNA if c.prim_no_arity else 0)
             | (F_PRIMS if c.prim_map is not None else 0))
    out = bytearray(MAGIC)
    out.append(flags)
    out.append(c.rb & 255)
    if c.lzss:
        if c.sb is None:
            packed, c.sb = lzss.compress(c.codes, c.rb)
        else:
            packed = lzss.compress_with(c.codes, c.rb, c.sb)
        out.append(c.sb)
        payload = vlq128_encode(len(c.codes)) + packed
        c.compressed_size = len(packed)
        c.packed = packed
    else:
        payload = bytes(c.codes)
    if c.table is not None:
        if c.table.rb != c.rb:
            raise ContainerError("table rb differs from container rb")
        for s in c.table.sizes:
            out += vlq128_encode(s)
    if c.prim_map is not None:
        out += vlq128_encode(len(c.prim_map))
        for p in c.prim_map:
            out += vlq128_encode(p)
    out += struct.pack("<I", len(payload))
    out += payload
    return bytes(out)


def parse_container(data: bytes) -> Container:
    """Parse and (if needed) decompress; raises :class:`ContainerError` or an LZSS error."""
    data = bytes(data)
    if len(data) < 6 or data[:4] != MAGIC:
        raise ContainerError("not a RIBN container (bad magic)")
    flags, rb = data[4], data[5] or 256
    if flags & ~KNOWN_FLAGS:
        raise ContainerError(f"unknown flag bits {flags:#x}")
    if rb < 2:
        raise ContainerError(f"rb={rb} outside 2..256")
    pos = 6
    sb = None
    if flags & F_LZSS:
        if pos >= len(data):
            raise ContainerError("truncated header")
        sb = data[pos]
        pos += 1
        if sb < 1 or rb >= 256:
            raise ContainerError("bad LZSS parameters")
    table = None
    if flags & F_TABLE:
        sizes = []
        for _ in ENTRIES:
            s, pos = vlq128_decode(data, pos)
            sizes.append(s)
        try:
            table = EncodingTable(rb, tuple(sizes))
        except ValueError as e:
            raise ContainerError(f"bad encoding table: {e}") from None
    elif rb != 92:
        raise ContainerError("the original table requires rb=92")
    prim_map = None
    if flags & F_PRIMS:
        n, pos = vlq128_decode(data, pos)
        if n > 256:
            raise ContainerError("primitive map too long")
        prim_map = []
        for _ in range(n):
            p, pos = vlq128_decode(data, pos)
            prim_map.append(p)
    if pos + 4 > len(data):
        raise ContainerError("truncated header")
    (length,) = struct.unpack_from("<I", data, pos)
    pos += 4
    payload = data[pos:]
    if len(payload) > length:
        raise TrailingBytes(f"{len(payload) - length} byte(s) after the payload")
    if len(payload) != length:
        raise ContainerError(f"payload is {len(payload)} bytes, header says {length}")
    compressed_size = None
    if sb is not None:
        expected, p = vlq128_decode(payload, 0)
        if expected > 64 * len(payload) + 64:
            raise ContainerError("implausible decompressed length")
        compressed_size = len(payload) - p
        try:
            codes = lzss.decompress(payload[p:], rb, sb, expected)
        except lzss.LzssLengthError:
            if lzss.decompressed_length(payload[p:], rb, sb) > expected:
                raise TrailingBytes("compressed data continues past the declared length") from None
            raise
    else:
        codes = list(payload)
    if any(c >= rb for c in codes):
        raise ContainerError("code outside 0..rb-1")
    return Container(rb, codes, table, sb is not None, sb, bool(flags & F_ARITY),
                     bool(flags & F_PNA), prim_map, compressed_size)
