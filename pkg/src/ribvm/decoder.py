"""RIBN payload to symbol table and code graph, built directly in a rib store."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .container import Container, ContainerError, TrailingBytes, parse_container
from .encoding import ENTRIES, MERGE4_ENTRY, EncodeError, EncodingTable, INT, Kind, code_to_char, vlq_decode
from .lzss import LzssError
from .store import FALSE, PROCEDURE, SYMBOL, RibStore, fx

BUDGET_PER_CODE = 16


class DecodeError(ValueError):
    """Base class of every decoding failure."""


class StackUnderflow(DecodeError):
    pass


class ShareOutOfRange(DecodeError):
    pass


class TrailingGarbage(DecodeError):
    pass


class BadFinalStack(DecodeError):
    pass


class TruncatedStream(DecodeError):
    pass


class SymbolIndexError(DecodeError):
    pass


class BudgetExceeded(DecodeError):
    pass


class BadContainer(DecodeError):
    pass


@dataclass
class Decoded:
    symbols: list[int]       # symbol ribs, index = layout position
    program: int             # first instruction rib
    container: Container


def _vlq(codes: Sequence[int], pos: int, rb: int) -> tuple[int, int]:
    if pos >= len(codes):
        raise TruncatedStream("stream ends before a symbol table count")
    try:
        return vlq_decode(codes, pos, 0, rb)
    except EncodeError as e:
        raise TruncatedStream(str(e)) from None


def decode_symbol_table(codes: Sequence[int], pos: int, store: RibStore, rb: int,
                        keep: list[int]) -> int:
    """Append symbol ribs to ``keep`` (which the store treats as roots) and return the new position."""
    anon, pos = _vlq(codes, pos, rb)
    named, pos = _vlq(codes, pos, rb)
    if anon + named > len(codes):
        raise TruncatedStream("symbol counts exceed the stream length")
    empty = store.make_string("")
    keep.append(empty)
    for _ in range(anon):
        keep.append(store.alloc(FALSE, empty, fx(SYMBOL)))
    named_syms: list[int] = []
    for _ in range(named):
        length, pos = _vlq(codes, pos, rb)
        if pos + length > len(codes):
            raise TruncatedStream("truncated symbol name")
        try:
            name = "".join(code_to_char(c, rb) for c in reversed(codes[pos:pos + length]))
        except EncodeError as e:
            raise DecodeError(str(e)) from None
        pos += length
        s = store.make_string(name)
        keep.append(s)
        s = store.alloc(FALSE, s, fx(SYMBOL))
        keep[-1] = s
        named_syms.append(s)
    # names were written from the highest index down
    del keep[len(keep) - len(named_syms):]
    keep.extend(reversed(named_syms))
    keep.remove(empty)
    return pos


def decode_code(codes: Sequence[int], pos: int, table: EncodingTable, symbols: list[int],
                store: RibStore, budget: int) -> int:
    """Run the decoding instructions from ``pos`` to the end; returns the program rib."""
    rb = table.rb
    starts = table.starts
    entry_of = []
    for i, s in enumerate(table.sizes):
        entry_of.extend([i] * s)
    stack: list[int] = []
    f2 = store.f2
    steps = 0
    n = len(codes)
    with store.protect(stack):
        while pos < n:
            steps += 1
            if steps > budget:
                raise BudgetExceeded("decoding step budget exhausted")
            code = codes[pos]
            entry = entry_of[code]
            e = ENTRIES[entry]
            if entry == MERGE4_ENTRY:
                if len(stack) < 2:
                    raise StackUnderflow("if-merge needs two chains")
                y = stack.pop()
                x = stack[-1]
                stack[-1] = store.alloc(fx(4), y, x)
                pos += 1
                continue
            if e.long:
                try:
                    arg, pos = vlq_decode(codes, pos, starts[entry], rb)
                except EncodeError:
                    raise TruncatedStream("stream ends inside a long-form argument") from None
            else:
                arg = code - starts[entry]
                pos += 1
            if e.kind == Kind.SHARE:
                if not stack:
                    raise StackUnderflow("share with an empty stack")
                t = stack[-1]
                for _ in range(arg):
                    if not t & 1:
                        break
                    t = f2[t >> 1]
                steps += arg
                if not t & 1:
                    raise ShareOutOfRange(f"share {arg} runs past the end of the chain")
                stack.append(t)
                continue
            if e.arg_kind == INT:
                if arg >= 1 << 62:
                    raise DecodeError("integer argument out of fixnum range")
                val = fx(arg)
            else:
                if arg >= len(symbols):
                    raise SymbolIndexError(f"symbol index {arg} >= {len(symbols)}")
                val = symbols[arg]
            if e.kind == Kind.PUSH0:
                stack.append(store.alloc(fx(0), val, fx(0)))
            elif e.kind == Kind.MERGE3:
                if len(stack) < 2:
                    raise StackUnderflow("procedure merge needs two chains")
                y = stack.pop()
                stack.append(y)  # keep the body reachable while allocating
                code_rib = store.alloc(val, fx(0), y)
                stack[-1] = code_rib
                proc = store.alloc(code_rib, fx(0), fx(PROCEDURE))
                stack.pop()
                stack[-1] = store.alloc(fx(3), proc, stack[-1])
            else:
                if not stack:
                    raise StackUnderflow(f"{e.kind.name} with an empty stack")
                stack[-1] = store.alloc(fx(e.kind - Kind.LINK0), val, stack[-1])
        if len(stack) != 1:
            raise BadFinalStack(f"decoding left {len(stack)} chains on the stack")
        return stack[0]


def decode_container(c: Container, store: RibStore) -> Decoded:
    codes = c.codes
    table = c.encoding_table
    budget = BUDGET_PER_CODE * max(len(codes), 1)
    symbols: list[int] = []
    with store.protect(symbols):
        pos = decode_symbol_table(codes, 0, store, c.rb, symbols)
        if pos >= len(codes):
            raise TruncatedStream("no code after the symbol table")
        program = decode_code(codes, pos, table, symbols, store, budget)
    return Decoded(symbols, program, c)


def decode(data: bytes, store: RibStore) -> Decoded:
    """Parse, decompress and decode a container into ``store``."""
    try:
        c = parse_container(data)
    except TrailingBytes as e:
        raise TrailingGarbage(str(e)) from None
    except (ContainerError, LzssError) as e:
        raise BadContainer(str(e)) from None
    return decode_container(c, store)
