"""The rib heap: three parallel int64 field arrays with mark-sweep collection.

A field value is a tagged integer.  Even values are fixnums (``n << 1``),
odd values are references to a rib (``index << 1 | 1``).  Fixnums therefore
span ``[-2**62, 2**62)``.
"""

from __future__ import annotations

from array import array
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

from . import _kernels

# type tags stored in field 2 of data ribs
PAIR, PROCEDURE, SYMBOL, STRING, VECTOR, SINGLETON, CHAR = 0, 1, 2, 3, 4, 5, 6
INPUT_PORT, OUTPUT_PORT = 8, 9

# the three permanent singletons live at indexes 0, 1, 2
FALSE, TRUE, NIL = 1, 3, 5

DEFAULT_CAPACITY = 4 * 1024 * 1024
INITIAL_SIZE = 16 * 1024


def fx(n: int) -> int:
    """Tag a Python int as a fixnum value."""
    return n << 1


def is_rib(v: int) -> bool:
    return bool(v & 1)


def is_fixnum(v: int) -> bool:
    return not v & 1


def fixnum_value(v: int) -> int:
    return v >> 1


def rib_index(v: int) -> int:
    return v >> 1


def rib_ref(index: int) -> int:
    return index << 1 | 1


class HeapExhausted(MemoryError):
    pass


@dataclass
class CollectStats:
    live: int
    reclaimed: int


class RibStore:
    """Growable heap of ribs bounded by ``capacity`` cells."""

    def __init__(self, capacity: int = DEFAULT_CAPACITY, initial: int = INITIAL_SIZE):
        if capacity < 16:
            raise ValueError("capacity must be at least 16 ribs")
        self.capacity = capacity
        self.f0 = array("q")
        self.f1 = array("q")
        self.f2 = array("q")
        self.state = bytearray()  # 0 free, 1 allocated (2 transiently marked)
        self.size = 0
        self.free_head = -1
        self.free_count = 0
        self.roots: list[int] = []
        self._root_lists: list[list[int]] = []
        self._providers: list[Callable[[], Iterable[int]]] = []
        self.collections = 0
        self._grow(min(capacity, max(initial, 64)))
        for _ in range(3):
            self.alloc(0, 0, fx(SINGLETON))

    # -- allocation -----------------------------------------------------

    def _grow(self, extra: int) -> None:
        old = self.size
        new = min(self.capacity, old + extra)
        n = new - old
        if n <= 0:
            return
        zeros = array("q", bytes(8 * n))
        self.f1.extend(zeros)
        self.f2.extend(zeros)
        links = array("q", range(old + 1, new + 1))
        links[-1] = self.free_head
        self.f0.extend(links)
        self.state.extend(bytes(n))
        self.free_head = old
        self.free_count += n
        self.size = new

    def grow(self) -> bool:
        """Double the heap (bounded by capacity); False when already full."""
        if self.size >= self.capacity:
            return False
        self._grow(self.size)
        return True

    def ensure_free(self, needed: int, extra_roots: Iterable[int] = ()) -> None:
        if self.free_count >= needed:
            return
        self.collect(extra_roots)
        while (self.free_count < needed or self.free_count < self.size // 4) and self.grow():
            pass
        if self.free_count < needed:
            raise HeapExhausted(f"heap exhausted ({self.capacity} ribs)")

    def alloc(self, a: int, b: int, c: int) -> int:
        i = self.free_head
        if i < 0:
            self.ensure_free(1, (a, b, c))
            i = self.free_head
        self.free_head = self.f0[i]
        self.free_count -= 1
        self.f0[i] = a
        self.f1[i] = b
        self.f2[i] = c
        self.state[i] = 1
        return i << 1 | 1

    # -- field access ---------------------------------------------------

    def field(self, v: int, k: int) -> int:
        return (self.f0, self.f1, self.f2)[k][v >> 1]

    def set_field(self, v: int, k: int, x: int) -> None:
        (self.f0, self.f1, self.f2)[k][v >> 1] = x

    def is_allocated(self, v: int) -> bool:
        return bool(v & 1) and self.state[v >> 1] == 1

    # -- roots and collection -------------------------------------------

    def add_root_provider(self, fn: Callable[[], Iterable[int]]) -> None:
        self._providers.append(fn)

    def remove_root_provider(self, fn: Callable[[], Iterable[int]]) -> None:
        self._providers.remove(fn)

    @contextmanager
    def protect(self, values: list[int]) -> Iterator[list[int]]:
        """Treat ``values`` (a list the caller keeps mutating) as roots."""
        self._root_lists.append(values)
        try:
            yield values
        finally:
            self._root_lists.remove(values)

    def all_roots(self) -> list[int]:
        out = list(self.roots)
        for lst in self._root_lists:
            out.extend(lst)
        for fn in self._providers:
            out.extend(fn())
        return out

    def collect(self, extra_roots: Iterable[int] = ()) -> CollectStats:
        roots = self.all_roots()
        roots.extend(extra_roots)
        roots.extend((FALSE, TRUE, NIL))
        live, reclaimed, self.free_head, self.free_count = _kernels.gc_mark_sweep(
            self.f0, self.f1, self.f2, self.state, self.size, roots)
        self.collections += 1
        return CollectStats(live, reclaimed)

    def live_count(self) -> int:
        return self.size - self.free_count

    # -- host conversions -----------------------------------------------

    def make_list(self, values: list[int]) -> int:
        out = NIL
        with self.protect([out]) as keep:
            for v in reversed(values):
                out = self.alloc(v, out, fx(PAIR))
                keep[0] = out
        return out

    def make_string(self, text: str) -> int:
        chars = self.make_list([fx(ord(c)) for c in text])
        with self.protect([chars]):
            return self.alloc(chars, fx(len(text)), fx(STRING))

    def read_list(self, v: int, limit: int = 1 << 30) -> list[int]:
        out = []
        f0, f1 = self.f0, self.f1
        while v & 1 and v != NIL and len(out) < limit:
            out.append(f0[v >> 1])
            v = f1[v >> 1]
        return out

    def read_string(self, v: int) -> str:
        return "".join(chr(c >> 1) for c in self.read_list(self.f0[v >> 1]))
