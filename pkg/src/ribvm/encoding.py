"""Code DAG to decoding instructions to RIBN codes.

A decoding instruction rebuilds part of the DAG on the decoder's stack.
Each instruction kind owns up to two ranges of codes: a short range where
the argument is the offset within the range, and a long range whose first
code starts a variable-length integer.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

from .codegraph import CONST, IF, JUMP, CodeNode, Proc, Quoted, all_nodes, successors
from .compiler import SymbolLayout
from .datum import Symbol, is_int


class EncodeError(Exception):
    pass


class Kind(IntEnum):
    PUSH0 = 0
    LINK0 = 1
    LINK1 = 2
    LINK2 = 3
    LINK3 = 4
    MERGE3 = 5
    MERGE4 = 6
    SHARE = 7


INT, SYM = "int", "sym"


@dataclass(frozen=True)
class DecodingInstruction:
    kind: Kind
    arg_kind: str | None = None
    arg: int = 0

    def __repr__(self) -> str:
        if self.kind == Kind.MERGE4:
            return "MERGE4"
        return f"{self.kind.name} {self.arg_kind} {self.arg}"


@dataclass(frozen=True)
class Entry:
    kind: Kind
    arg_kind: str | None
    long: bool


# canonical order of the 19 ranges; the long MERGE3 range carries an arity
ENTRIES: tuple[Entry, ...] = (
    Entry(Kind.PUSH0, SYM, False), Entry(Kind.PUSH0, INT, True), Entry(Kind.PUSH0, SYM, True),
    Entry(Kind.LINK0, SYM, False), Entry(Kind.LINK0, INT, True), Entry(Kind.LINK0, SYM, True),
    Entry(Kind.LINK1, INT, True), Entry(Kind.LINK1, SYM, True),
    Entry(Kind.LINK2, INT, False), Entry(Kind.LINK2, INT, True), Entry(Kind.LINK2, SYM, True),
    Entry(Kind.LINK3, INT, False), Entry(Kind.LINK3, INT, True), Entry(Kind.LINK3, SYM, True),
    Entry(Kind.MERGE3, INT, False), Entry(Kind.MERGE3, INT, True),
    Entry(Kind.MERGE4, None, False),
    Entry(Kind.SHARE, INT, False), Entry(Kind.SHARE, INT, True),
)
MERGE4_ENTRY = 16
SHARE_ENTRIES = (17, 18)

# (kind, arg_kind) -> (short entry index or None, long entry index or None)
GROUPS: dict[tuple[Kind, str | None], tuple[int | None, int | None]] = {}
for _i, _e in enumerate(ENTRIES):
    _s, _l = GROUPS.get((_e.kind, _e.arg_kind), (None, None))
    GROUPS[(_e.kind, _e.arg_kind)] = (_s, _i) if _e.long else (_i, _l)

ORIGINAL_SIZES = (20, 1, 2, 30, 1, 2, 1, 2, 10, 1, 2, 11, 1, 2, 4, 1, 1, 0, 0)


@dataclass(frozen=True)
class EncodingTable:
    rb: int
    sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.sizes) != len(ENTRIES):
            raise ValueError(f"expected {len(ENTRIES)} range sizes")
        if not 2 <= self.rb <= 256:
            raise ValueError("rb must be in 2..256")
        if any(s < 0 for s in self.sizes) or sum(self.sizes) != self.rb:
            raise ValueError(f"range sizes must be nonnegative and sum to rb={self.rb}")
        share = self.sizes[SHARE_ENTRIES[0]] + self.sizes[SHARE_ENTRIES[1]]
        for i, e in enumerate(ENTRIES):
            if e.long and self.sizes[i] < 1 and not (i in SHARE_ENTRIES and share == 0):
                raise ValueError(f"long range {i} must have at least one code")
        if self.sizes[MERGE4_ENTRY] != 1:
            raise ValueError("the if-merge range has exactly one code")

    @property
    def starts(self) -> tuple[int, ...]:
        out, acc = [], 0
        for s in self.sizes:
            out.append(acc)
            acc += s
        return tuple(out)

    @property
    def has_share(self) -> bool:
        return self.sizes[SHARE_ENTRIES[1]] > 0

    def range(self, entry: int) -> tuple[int, int]:
        return self.starts[entry], self.sizes[entry]

    def lookup(self, code: int) -> tuple[int, int]:
        """Entry index and offset within it for a code."""
        acc = 0
        for i, s in enumerate(self.sizes):
            if code < acc + s:
                return i, code - acc
            acc += s
        raise EncodeError(f"code {code} outside 0..{self.rb - 1}")


def original_table() -> EncodingTable:
    return EncodingTable(92, ORIGINAL_SIZES)


# -- variable-length integers --------------------------------------------------

def vlq_encode(value: int, start: int, size: int, rb: int) -> list[int]:
    """Long-form encoding: first code in ``start..start+size-1``, then base-``rb//2`` digits."""
    if value < 0:
        raise EncodeError(f"negative argument {value}")
    if size < 1:
        raise EncodeError("empty long range")
    d = rb // 2
    k = 1
    while value >= size * d ** k:
        k += 1
    head, rem = divmod(value, d ** k)
    digits = []
    for _ in range(k):
        digits.append(rem % d)
        rem //= d
    digits.reverse()
    return [start + head] + [d + x for x in digits[:-1]] + [digits[-1]]


def vlq_decode(codes: Sequence[int], pos: int, start: int, rb: int) -> tuple[int, int]:
    """Inverse of :func:`vlq_encode`; ``codes[pos]`` is the range code."""
    d = rb // 2
    v = codes[pos] - start
    pos += 1
    while True:
        if pos >= len(codes):
            raise EncodeError("stream ends inside a long-form integer")
        c = codes[pos]
        pos += 1
        if c < d:
            return v * d + c, pos
        v = v * d + (c - d)


def instruction_codes(ins: DecodingInstruction, table: EncodingTable) -> list[int]:
    if ins.kind == Kind.MERGE4:
        return [table.starts[MERGE4_ENTRY]]
    short, long = GROUPS.get((ins.kind, ins.arg_kind), (None, None))
    if short is not None and ins.arg < table.sizes[short]:
        return [table.starts[short] + ins.arg]
    if long is None or table.sizes[long] == 0:
        raise EncodeError(f"no range can encode {ins!r}")
    return vlq_encode(ins.arg, table.starts[long], table.sizes[long], table.rb)


def encode(instrs: Iterable[DecodingInstruction], table: EncodingTable) -> list[int]:
    out: list[int] = []
    for ins in instrs:
        out.extend(instruction_codes(ins, table))
    return out


def decode_instructions(codes: Sequence[int], table: EncodingTable, pos: int = 0) -> list[DecodingInstruction]:
    """Parse a code stream back into instructions (host-side inverse of :func:`encode`)."""
    out = []
    starts = table.starts
    while pos < len(codes):
        entry, off = table.lookup(codes[pos])
        e = ENTRIES[entry]
        if e.kind == Kind.MERGE4:
            out.append(DecodingInstruction(Kind.MERGE4))
            pos += 1
        elif e.long:
            v, pos = vlq_decode(codes, pos, starts[entry], table.rb)
            out.append(DecodingInstruction(e.kind, e.arg_kind, v))
        else:
            out.append(DecodingInstruction(e.kind, e.arg_kind, off))
            pos += 1
    return out


# -- optimal table search ----------------------------------------------------

def _long_len(value: int, size: int, d: int) -> int:
    k = 1
    while value >= size * d ** k:
        k += 1
    return 1 + k


def _group_cost(hist: dict[int, int], short: int, long: int, d: int) -> float:
    total = 0
    for arg, n in hist.items():
        if arg < short:
            total += n
        elif long == 0:
            return float("inf")
        else:
            total += n * _long_len(arg, long, d)
    return total


def _histograms(instrs: Iterable[DecodingInstruction]) -> dict[tuple, dict[int, int]]:
    hist: dict[tuple, dict[int, int]] = {}
    for ins in instrs:
        if ins.kind == Kind.MERGE4:
            continue
        h = hist.setdefault((ins.kind, ins.arg_kind), {})
        h[ins.arg] = h.get(ins.arg, 0) + 1
    return hist


def table_cost(instrs: Sequence[DecodingInstruction], table: EncodingTable) -> float:
    hist = _histograms(instrs)
    merges = sum(1 for i in instrs if i.kind == Kind.MERGE4)
    d = table.rb // 2
    total: float = merges
    for key, h in hist.items():
        s, l = GROUPS[key]
        total += _group_cost(h, table.sizes[s] if s is not None else 0, table.sizes[l], d)
    return total


def search_optimal_table(instrs: Sequence[DecodingInstruction], rb: int,
                         trace: list[float] | None = None) -> EncodingTable:
    """Greedy growth of ranges by best ratio of codes saved to codes spent.

    Each step considers growing one range up to each size at which some
    argument changes encoded length, and takes the growth with the best
    savings per code.  Ties go to the earliest entry in canonical order, then
    to the smaller growth.  ``trace`` (if given) receives the stream cost
    after every step.
    """
    sizes = [1 if e.long else 0 for e in ENTRIES]
    sizes[MERGE4_ENTRY] = 1
    if rb < sum(sizes):
        raise EncodeError(f"rb={rb} is smaller than the {sum(sizes)} mandatory codes")
    d = rb // 2
    hist = _histograms(instrs)
    group_of = {}
    for key, (s, l) in GROUPS.items():
        for idx in (s, l):
            if idx is not None:
                group_of[idx] = key

    def cost(key) -> float:
        s, l = GROUPS[key]
        return _group_cost(hist.get(key, {}), sizes[s] if s is not None else 0, sizes[l], d)

    def targets(i: int, limit: int) -> set[int]:
        """Sizes of range ``i`` at which some argument gets shorter."""
        key = group_of[i]
        s, _ = GROUPS[key]
        cur = sizes[i]
        out = set()
        for a in hist.get(key, ()):
            if i == s:
                out.add(a + 1)
            elif s is None or a >= sizes[s]:
                q = a // d
                while q:
                    out.add(q + 1)
                    q //= d
        return {t for t in out if cur < t <= limit}

    current = {key: cost(key) for key in GROUPS if key[0] != Kind.MERGE4}
    merges = sum(1 for i in instrs if i.kind == Kind.MERGE4)
    remaining = rb - sum(sizes)
    while remaining > 0:
        best, best_size, best_gain, best_spent = None, 0, 0.0, 1
        for i, e in enumerate(ENTRIES):
            if i == MERGE4_ENTRY:
                continue
            key = group_of[i]
            cur = sizes[i]
            for t in sorted(targets(i, cur + remaining)):
                sizes[i] = t
                gain = current[key] - cost(key)
                sizes[i] = cur
                if gain * best_spent > best_gain * (t - cur):
                    best, best_size, best_gain, best_spent = i, t, gain, t - cur
        if best is None:   # nothing helps any more: spend one code on the first range
            best = next(i for i in range(len(ENTRIES)) if i != MERGE4_ENTRY)
            best_size = sizes[best] + 1
        remaining -= best_size - sizes[best]
        sizes[best] = best_size
        current[group_of[best]] = cost(group_of[best])
        if trace is not None:
            trace.append(merges + sum(current.values()))
    return EncodingTable(rb, tuple(sizes))


# -- linearization ---------------------------------------------------------

class _Spines:
    """Ancestor queries on the forest formed by ``next`` pointers.

    A node ``n`` lies on the chain starting at ``h`` iff ``n`` is an ancestor
    of ``h`` when each node's parent is its ``next``.
    """

    def __init__(self, root: CodeNode):
        nodes = all_nodes(root)
        kids: dict[int, list[CodeNode]] = {}
        roots = []
        for n in nodes:
            if n.next is None:
                roots.append(n)
            else:
                kids.setdefault(id(n.next), []).append(n)
        self.tin: dict[int, int] = {}
        self.tout: dict[int, int] = {}
        self.depth: dict[int, int] = {}
        clock = 0
        for r in roots:
            stack = [(r, 0, False)]
            while stack:
                n, dep, done = stack.pop()
                if done:
                    self.tout[id(n)] = clock
                    clock += 1
                    continue
                self.tin[id(n)] = clock
                self.depth[id(n)] = dep
                clock += 1
                stack.append((n, dep, True))
                for k in kids.get(id(n), ()):
                    stack.append((k, dep + 1, False))

    def on_chain(self, n: CodeNode, head: CodeNode) -> bool:
        return self.tin[id(n)] <= self.tin[id(head)] and self.tout[id(head)] <= self.tout[id(n)]

    def distance(self, head: CodeNode, n: CodeNode) -> int:
        return self.depth[id(head)] - self.depth[id(n)]


def _operand(x, sym_index: dict[Symbol, int]) -> tuple[str, int]:
    if isinstance(x, Symbol):
        if x not in sym_index:
            raise EncodeError(f"symbol {x.name} missing from the symbol table")
        return SYM, sym_index[x]
    if is_int(x) and x >= 0:
        return INT, x
    if isinstance(x, Quoted) or is_int(x):
        raise EncodeError(f"constant {x!r} must be lifted before encoding")
    raise EncodeError(f"operand {x!r} is not encodable")


_LINK = {0: Kind.LINK0, 1: Kind.LINK1, 2: Kind.LINK2, 3: Kind.LINK3}


def linearize(root: CodeNode, layout: SymbolLayout | dict[Symbol, int], share: bool = True) -> list[DecodingInstruction]:
    """Decoding instructions that rebuild ``root``.

    With ``share`` a join is rebuilt with SHARE when the shared tail lies on
    the chain the decoder is currently extending; any other sharing (and
    all sharing when ``share`` is false) is rebuilt by duplication.
    """
    sym_index = layout.index() if isinstance(layout, SymbolLayout) else layout
    spines = _Spines(root) if share else None
    out: list[DecodingInstruction] = []

    def build(node: CodeNode, avail: CodeNode | None) -> None:
        prefix = []
        n: CodeNode | None = node
        while n is not None and not (spines is not None and avail is not None and spines.on_chain(n, avail)):
            prefix.append(n)
            n = n.next
        if n is None:
            last = prefix.pop()
            out.append(DecodingInstruction(Kind.PUSH0, *_operand(last.operand, sym_index)))
        else:
            out.append(DecodingInstruction(Kind.SHARE, INT, spines.distance(avail, n)))
        for nd in reversed(prefix):
            link(nd)

    def link(nd: CodeNode) -> None:
        if nd.op == IF:
            build(nd.operand, nd.next)
            out.append(DecodingInstruction(Kind.MERGE4))
        elif nd.op == CONST and isinstance(nd.operand, Proc):
            build(nd.operand.body, nd.next)
            out.append(DecodingInstruction(Kind.MERGE3, INT, nd.operand.arity))
        else:
            out.append(DecodingInstruction(_LINK[nd.op], *_operand(nd.operand, sym_index)))

    build(root, None)
    return out


def expressible_copy(root: CodeNode, share: bool = True) -> int:
    """Number of nodes the decoder will build for ``root`` (for size reports)."""
    instrs = linearize(root, {s: 0 for s in _symbols(root)}, share)
    return sum(1 for i in instrs if i.kind not in (Kind.SHARE,))


def _symbols(root: CodeNode) -> set[Symbol]:
    return {n.operand for n in all_nodes(root) if isinstance(n.operand, Symbol)}


# -- symbol table section ------------------------------------------------------

ALPHABET92 = "".join(chr(c) for c in range(32, 127) if chr(c) not in '"\\`')
_ALPHA_INDEX = {c: i for i, c in enumerate(ALPHABET92)}
assert len(ALPHABET92) == 92


def char_to_code(c: str, rb: int) -> int:
    if rb > 126:
        code = ord(c)
        if code >= rb:
            raise EncodeError(f"character {c!r} does not fit in base {rb}")
        return code
    if c not in _ALPHA_INDEX or _ALPHA_INDEX[c] >= rb:
        raise EncodeError(f"character {c!r} is outside the base-{rb} alphabet")
    return _ALPHA_INDEX[c]


def code_to_char(code: int, rb: int) -> str:
    if rb > 126:
        return chr(code)
    if code >= len(ALPHABET92):
        raise EncodeError(f"code {code} is outside the alphabet")
    return ALPHABET92[code]


def encode_symbol_table(layout: SymbolLayout, rb: int) -> list[int]:
    n = len(layout)
    anon = layout.anonymous_count
    out = vlq_encode(anon, 0, rb, rb) + vlq_encode(n - anon, 0, rb, rb)
    for i in range(n - 1, anon - 1, -1):
        name = layout.name_of(i)
        out.extend(vlq_encode(len(name), 0, rb, rb))
        out.extend(char_to_code(c, rb) for c in reversed(name))
    return out


def decode_symbol_names(codes: Sequence[int], pos: int, rb: int) -> tuple[list[str], int]:
    """Host-side inverse of :func:`encode_symbol_table`: names by index ("" if anonymous)."""
    anon, pos = vlq_decode(codes, pos, 0, rb)
    named, pos = vlq_decode(codes, pos, 0, rb)
    names = []
    for _ in range(named):
        length, pos = vlq_decode(codes, pos, 0, rb)
        if pos + length > len(codes):
            raise EncodeError("truncated symbol name")
        names.append("".join(code_to_char(c, rb) for c in reversed(codes[pos:pos + length])))
        pos += length
    return [""] * anon + names[::-1], pos


# -- top-level entry -----------------------------------------------------------

@dataclass
class EncodedProgram:
    table: EncodingTable
    optimal: bool
    symtab: list[int]
    instrs: list[DecodingInstruction]
    codes: list[int]

    @property
    def ribn(self) -> list[int]:
        return self.symtab + self.codes


def encode_program(root: CodeNode, layout: SymbolLayout, encoding: str = "optimal",
                   rb: int = 256) -> EncodedProgram:
    if encoding == "original":
        if rb != 92:
            raise EncodeError("the original encoding is defined for rb=92 only")
        table = original_table()
        instrs = linearize(root, layout, share=False)
    elif encoding == "optimal":
        instrs = linearize(root, layout, share=True)
        table = search_optimal_table(instrs, rb)
    else:
        raise EncodeError(f"unknown encoding {encoding!r}")
    return EncodedProgram(table, encoding == "optimal", encode_symbol_table(layout, rb),
                          instrs, encode(instrs, table))
