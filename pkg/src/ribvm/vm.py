"""The RVM driver: machine state, the io table, error reporting.

The dispatch loop itself lives in the kernels; this module sets up the
symbol table and stack, services I/O callbacks, grows the heap on request
and turns error tuples into messages.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import BinaryIO, Sequence

from . import _kernels
from .compiler import BASELINE_PRIMITIVES
from .decoder import Decoded, decode
from .store import (CHAR, FALSE, INPUT_PORT, NIL, OUTPUT_PORT, PAIR, PROCEDURE, STRING, SYMBOL,
                    TRUE, VECTOR, HeapExhausted, RibStore, fixnum_value, fx)

PINNED_NAMES = ("##rib", "##false", "##true", "##nil")
SYMTBL_NAME = "##symtbl"


class VMError(RuntimeError):
    """A runtime error raised by the program or the machine."""

    def __init__(self, message: str, kind: str = "runtime"):
        super().__init__(message)
        self.kind = kind


class HeapOverflow(VMError):
    def __init__(self, message: str):
        super().__init__(message, "heap")


@dataclass
class RunResult:
    status: int
    steps: int
    value: int | None = None     # value left on the stack at halt


class Machine:
    def __init__(self, store: RibStore, symbols: Sequence[int], *, arity_check: bool = False,
                 prim_no_arity: bool = False, prim_map: Sequence[int] | None = None,
                 stdin: BinaryIO | None = None, stdout: BinaryIO | None = None):
        self.store = store
        self.symbols = list(symbols)
        self.arity_check = arity_check
        self.prim_no_arity = prim_no_arity
        self.prim_map = list(prim_map) if prim_map is not None else list(range(len(BASELINE_PRIMITIVES)))
        for p in self.prim_map:
            if not 0 <= p < len(BASELINE_PRIMITIVES):
                raise VMError(f"unknown primitive number {p} in the primitive map", "decode")
        self.stdin = stdin if stdin is not None else sys.stdin.buffer
        self.stdout = stdout if stdout is not None else sys.stdout.buffer
        self.files: dict[int, BinaryIO] = {0: self.stdin, 1: self.stdout}
        self.steps = 0
        self.exit_status = 0
        self.error: tuple | None = None
        self.pc = self.halt = FALSE
        self.stack = fx(0)
        store.add_root_provider(self._roots)
        self.halt = store.alloc(fx(5), fx(0), fx(0))
        self._init_symbols()

    def _roots(self) -> list[int]:
        return [self.pc, self.stack, self.halt, *self.symbols]

    def close(self) -> None:
        self.store.remove_root_provider(self._roots)
        for fd, f in list(self.files.items()):
            if fd > 1:
                f.close()
        self.files = {0: self.stdin, 1: self.stdout}

    # -- symbols ------------------------------------------------------

    def symbol_name(self, sym: int) -> str:
        return self.store.read_string(self.store.f1[sym >> 1])

    def _init_symbols(self) -> None:
        st = self.store
        if len(self.symbols) < 4:
            raise VMError("symbol table lacks the pinned entries", "decode")
        values = (st.alloc(fx(0), fx(0), fx(PROCEDURE)), FALSE, TRUE, NIL)
        for sym, val in zip(self.symbols, values):
            st.f0[sym >> 1] = val
        for sym in self.symbols:
            if self.symbol_name(sym) == SYMTBL_NAME:
                st.f0[sym >> 1] = st.make_list(self.symbols)

    def add_symbols(self, new: Sequence[int]) -> None:
        """Extend the table (used by the REPL) and refresh the symbol list."""
        self.symbols.extend(new)
        for sym in self.symbols:
            if self.symbol_name(sym) == SYMTBL_NAME:
                self.store.f0[sym >> 1] = self.store.make_list(self.symbols)

    # -- io ---------------------------------------------------------

    def io(self, b: int, a: int, c: int) -> int:
        if b == 18:
            return self._read(0)
        if b == 19:
            self._write(1, a)
            return 0
        if b == 23 or b == 24:
            try:
                name = self.store.read_string(a)
                f = open(name, "rb" if b == 23 else "wb")
            except (OSError, ValueError, IndexError):
                return -1
            fd = 2
            while fd in self.files:
                fd += 1
            self.files[fd] = f
            return fd
        if b == 25:
            return self._read(a)
        if b == 26:
            self._write(c, a)
            return 0
        if b == 27 or b == 28:
            f = self.files.get(a)
            if f is not None and a > 1:
                f.close()
                del self.files[a]
            return 0
        return -1

    def _read(self, fd: int) -> int:
        f = self.files.get(fd)
        if f is None:
            return -1
        if fd == 0:
            self.flush()
        data = f.read(1)
        return data[0] if data else -1

    def _write(self, fd: int, code: int) -> None:
        f = self.files.get(fd)
        if f is not None:
            f.write(bytes((code & 255,)))

    def flush(self) -> None:
        try:
            self.stdout.flush()
        except (AttributeError, ValueError):
            pass

    # -- execution ----------------------------------------------------

    def start(self, program: int) -> None:
        self.pc = program
        self.stack = self.store.alloc(fx(0), fx(0), self.halt)

    def execute(self) -> RunResult:
        """Run from the current pc until halt, exit or error."""
        try:
            while True:
                status = _kernels.execute(self)
                if status == _kernels.GROW:
                    self.store.grow()
                    continue
                break
        finally:
            self.flush()
        if status == _kernels.HALT:
            top = self.stack
            value = self.store.f0[top >> 1] if top & 1 else None
            return RunResult(0, self.steps, value)
        if status == _kernels.EXIT:
            return RunResult(self.exit_status, self.steps)
        err = self.error or ("unknown",)
        if err[0] == "heap":
            raise HeapOverflow(f"out of memory: heap limit of {self.store.capacity} ribs reached")
        raise VMError(self.describe_error(err))

    def run(self, program: int) -> RunResult:
        self.start(program)
        return self.execute()

    def describe_error(self, err: tuple) -> str:
        kind = err[0]
        if kind == "not-procedure":
            _, o, proc = err
            what = self._operand_name(o)
            if proc == FALSE and o & 1:
                return f"unbound global or non-procedure: {what}"
            return f"attempt to call a non-procedure ({write_value(self.store, proc)}) via {what}"
        if kind == "arity":
            _, o, nparams, rest, nargs = err
            want = f"at least {nparams}" if rest else str(nparams)
            return f"{self._operand_name(o)}: expected {want} argument(s), got {nargs}"
        if kind == "type":
            _, b, v = err
            return f"{BASELINE_PRIMITIVES[b][0]}: bad argument {write_value(self.store, v)}"
        if kind == "div0":
            return "quotient: division by zero"
        if kind == "user":
            _, msg, irritants = err
            parts = [write_value(self.store, msg, display=True)]
            parts += [write_value(self.store, x) for x in self.store.read_list(irritants, 64)]
            return " ".join(parts)
        if kind == "stack":
            return "stack underflow (argument count mismatch? compile with arity checking)"
        if kind == "bad-instruction":
            return f"bad instruction opcode {err[1]}"
        if kind == "bad-primitive":
            return f"bad primitive number {err[1]}"
        return f"machine error {err!r}"

    def _operand_name(self, o: int) -> str:
        if o & 1:
            name = self.symbol_name(o)
            if name:
                return name
            if o in self.symbols:
                return f"global #{self.symbols.index(o)}"
            return "global"
        return f"local slot {o >> 1}"


# -- host-side printer ---------------------------------------------------------

def write_value(store: RibStore, v: int, display: bool = False, limit: int = 10000) -> str:
    out: list[str] = []
    budget = [limit]
    _write(store, v, display, out, budget)
    return "".join(out)


_CHAR_NAMES = {32: "space", 10: "newline"}


def _write(store: RibStore, v: int, display: bool, out: list[str], budget: list[int]) -> None:
    budget[0] -= 1
    if budget[0] < 0:
        out.append("...")
        return
    if not v & 1:
        out.append(str(fixnum_value(v)))
        return
    if v == FALSE:
        out.append("#f")
        return
    if v == TRUE:
        out.append("#t")
        return
    if v == NIL:
        out.append("()")
        return
    f0, f1, f2 = store.f0[v >> 1], store.f1[v >> 1], store.f2[v >> 1]
    tag = fixnum_value(f2) if not f2 & 1 else -1
    if tag == PAIR:
        out.append("(")
        _write(store, f0, display, out, budget)
        rest = f1
        while rest & 1 and rest != NIL and store.f2[rest >> 1] == fx(PAIR) and budget[0] > 0:
            out.append(" ")
            _write(store, store.f0[rest >> 1], display, out, budget)
            rest = store.f1[rest >> 1]
        if rest != NIL:
            out.append(" . ")
            _write(store, rest, display, out, budget)
        out.append(")")
    elif tag == STRING:
        text = "".join(chr(fixnum_value(c) & 0x10FFFF) for c in store.read_list(f0, budget[0]))
        if display:
            out.append(text)
        else:
            out.append('"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"')
    elif tag == SYMBOL:
        out.append(store.read_string(f1) if f1 & 1 else "#<symbol>")
    elif tag == CHAR:
        code = fixnum_value(f0)
        if display:
            out.append(chr(code & 0x10FFFF))
        else:
            out.append("#\\" + _CHAR_NAMES.get(code, chr(code & 0x10FFFF)))
    elif tag == VECTOR:
        out.append("#(")
        for i, x in enumerate(store.read_list(f0, budget[0])):
            if i:
                out.append(" ")
            _write(store, x, display, out, budget)
        out.append(")")
    elif tag == PROCEDURE:
        out.append("#<procedure>")
    elif tag == 5:
        out.append("#<eof>")
    elif tag == INPUT_PORT:
        out.append("#<input-port>")
    elif tag == OUTPUT_PORT:
        out.append("#<output-port>")
    else:
        out.append("#<rib>")


# -- convenience ------------------------------------------------------------

def load(data: bytes, store: RibStore | None = None, **io) -> tuple[Machine, Decoded]:
    """Decode a container and build a ready machine (not yet started)."""
    store = store if store is not None else RibStore()
    d = decode(data, store)
    c = d.container
    with store.protect([d.program, *d.symbols]):
        m = Machine(store, d.symbols, arity_check=c.arity_check, prim_no_arity=c.prim_no_arity,
                    prim_map=c.prim_map, **io)
    return m, d


def run_container(data: bytes, store: RibStore | None = None, **io) -> RunResult:
    try:
        m, d = load(data, store, **io)
    except HeapExhausted as e:
        raise HeapOverflow(f"out of memory while loading: {e}") from None
    try:
        return m.run(d.program)
    except HeapExhausted as e:
        raise HeapOverflow(str(e)) from None
    finally:
        m.close()
