"""Interactive sessions: compile each input against the running machine.

The library is compiled once, unpruned and with every symbol named, and run
to populate the globals.  Each later input is expanded with the same
expander (so macros persist), compiled to a code DAG, written straight into
the live rib store and executed.  Globals are symbol ribs looked up by name,
so definitions persist across inputs.
"""

from __future__ import annotations

import io
import sys
from pathlib import Path
from typing import Any, BinaryIO, TextIO

from .codegraph import IF, SET, CodeFactory, CodeNode, Proc, _postorder
from .compiler import (BASELINE_PRIMITIVES, CompileError, CompileOptions, Codegen, _flatten,
                       _primitive_table, compile_program, lift_constants, prelude_forms,
                       resolve_if_features)
from .datum import Pair, Symbol, to_pylist
from .expander import App, CoreForm, Define, ExpandError, Expander, Ref, Seq, Set
from .features import FeatureError, FeatureSet
from .pipeline import BuildOptions, library_source, package
from .reader import EOF as READ_EOF, ReadError, Reader, read_all
from .store import FALSE, PROCEDURE, SYMBOL, HeapExhausted, RibStore, fx
from .vm import HeapOverflow, Machine, VMError, load, write_value

LOAD = Symbol("load")
EXIT = Symbol("exit")

# inputs headed by these are not echoed
_QUIET_FORMS = frozenset(Symbol(n) for n in (
    "define", "set!", "define-macro", "define-expander", "define-primitive", "define-feature",
    "load"))
# nor are inputs whose value comes from a call to one of these
_QUIET_CALLS = frozenset(Symbol(n) for n in (
    "display", "write", "newline", "write-char", "putchar", "for-each", "set-car!",
    "set-cdr!", "vector-set!", "string-set!", "close-input-port", "close-output-port"))


class SessionExit(Exception):
    def __init__(self, status: int):
        super().__init__(status)
        self.status = status


def _quiet_value(form: CoreForm) -> bool:
    while isinstance(form, Seq) and form.forms:
        form = form.forms[-1]
    if isinstance(form, (Define, Set)):
        return True
    return isinstance(form, App) and isinstance(form.op, Ref) and form.op.name in _QUIET_CALLS


def echoes(datum: Any, forms: list[CoreForm]) -> bool:
    """Whether the REPL prints the value of this input."""
    if isinstance(datum, Pair) and datum.car in _QUIET_FORMS:
        return False
    return bool(forms) and not _quiet_value(forms[-1])


class Session:
    """A live machine plus the compile-time state needed to extend it."""

    def __init__(self, library: str = "plain", *, stdin: BinaryIO | None = None,
                 stdout: BinaryIO | None = None, store: RibStore | None = None):
        self.store = store if store is not None else RibStore()
        self.expander = Expander(FeatureSet())
        lib = self.expander.expand_program(read_all(library_source(library)))
        prims = list(self.expander.features.primitives) or [p for p, _ in BASELINE_PRIMITIVES]
        # keep every primitive global bound, whether or not the library calls it
        keep = "0"
        for p in reversed(prims):
            keep = f"(##rib {p} {keep} 0)"
        prog = self.expander.expand_program(read_all(f"(define ##repl-primitives {keep})"))
        opts = CompileOptions(arity_check=True, prune=False, keep_names=True)
        compiled = compile_program(prog, lib, self.expander.features, opts)
        image = package(compiled, BuildOptions(arity_check=True, keep_names=True, prune=False))
        self.features = compiled.features
        self.prims = _primitive_table(self.expander.features)
        self.machine, decoded = load(image.data, self.store, stdin=stdin, stdout=stdout)
        self.by_name = {self.machine.symbol_name(s): s for s in self.machine.symbols}
        self.counter = 0
        self._run(decoded.program)

    # -- compiling one input --------------------------------------------------

    def compile(self, datum: Any) -> tuple[CodeNode, bool]:
        """Code for one input, and whether its value should be echoed."""
        forms = self.expander.expand_program([datum])
        echo = echoes(datum, forms)
        forms = _flatten(resolve_if_features(f, self.features.enabled) for f in forms)
        for f in forms:
            if isinstance(f, (Define, Set)) and f.name in self.prims:
                raise CompileError(f"cannot redefine primitive {f.name.name}")
        factory = CodeFactory()
        gen = Codegen(factory, self.prims, True, False)
        root = gen.comp_toplevel(forms)
        self.counter += 1
        root, lifted = lift_constants(root, factory, prefix=f"##k{self.counter}.")
        for f in reversed(prelude_forms(lifted)):
            root = gen.comp(f.expr, [], factory.hash_cons(SET, f.name, root))
        return root, echo

    def symbol(self, sym: Symbol) -> int:
        s = self.by_name.get(sym.name)
        if s is None:
            st = self.store
            with st.protect([]) as keep:
                keep.append(st.make_string(sym.name))
                s = st.alloc(FALSE, keep[0], fx(SYMBOL))
                keep.append(s)
                self.machine.add_symbols([s])
            self.by_name[sym.name] = s
        return s

    def materialize(self, root: CodeNode) -> int:
        """Write the DAG into the store as instruction ribs, sharing preserved."""
        st = self.store
        order = _postorder(root)
        # intern symbols first so allocation below never has to
        for n in order:
            if isinstance(n.operand, Symbol):
                self.symbol(n.operand)
        ribs: dict[int, int] = {}
        procs: dict[int, int] = {}
        with st.protect([]) as keep:
            for n in order:
                op = n.operand
                if n.op == IF:
                    operand = ribs[id(op)]
                elif isinstance(op, Proc):
                    operand = procs.get(id(op), 0)
                    if not operand:
                        code = st.alloc(fx(op.arity), fx(0), ribs[id(op.body)])
                        keep.append(code)
                        operand = st.alloc(code, fx(0), fx(PROCEDURE))
                        keep.append(operand)
                        procs[id(op)] = operand
                elif isinstance(op, Symbol):
                    operand = self.by_name[op.name]
                else:
                    operand = fx(op)
                nxt = ribs[id(n.next)] if n.next is not None else fx(0)
                r = st.alloc(fx(n.op), operand, nxt)
                keep.append(r)
                ribs[id(n)] = r
            return ribs[id(root)]

    # -- running ------------------------------------------------------------

    def _run(self, program: int) -> int | None:
        m = self.machine
        try:
            res = m.run(program)
        except HeapExhausted as e:
            raise HeapOverflow(str(e)) from None
        if res.value is None:   # the program called exit
            raise SessionExit(res.status)
        return res.value

    def eval(self, datum: Any) -> int | None:
        """Compile and run one datum; its value, or None when it is not echoed."""
        if isinstance(datum, Pair) and datum.car == LOAD:
            args = to_pylist(datum.cdr)
            if len(args) != 1 or not isinstance(args[0], str):
                raise CompileError("load expects one file name string")
            self.load(args[0])
            return None
        root, echo = self.compile(datum)
        value = self._run(self.materialize(root))
        return value if echo else None

    def load(self, path: str) -> None:
        for d in read_all(Path(path).read_text()):
            self.eval(d)

    def write(self, value: int) -> str:
        return write_value(self.store, value)

    def close(self) -> None:
        self.machine.close()


ERRORS = (ReadError, ExpandError, CompileError, FeatureError, VMError, OSError, RecursionError)


def run_session(inp: TextIO, out: TextIO, *, library: str = "plain", prompt: str = "> ",
                stdin: BinaryIO | None = None, stdout: BinaryIO | None = None,
                err: TextIO | None = None) -> int:
    """Read-eval-print until end of input or ``(exit)``; returns the exit status.

    Program output goes to ``stdout`` (bytes); prompts, echoed values and
    error messages go to ``out``/``err`` (text).
    """
    err = err if err is not None else out
    if stdout is None:
        stdout = _TextBytes(out)
    session = Session(library, stdin=stdin if stdin is not None else io.BytesIO(), stdout=stdout)
    reader = _InputReader(inp)
    try:
        while True:
            out.write(prompt)
            out.flush()
            try:
                datum = reader.next()
            except EOFError:
                out.write("\n")
                return 0
            except ReadError as e:
                err.write(f"error: {e}\n")
                continue
            try:
                value = session.eval(datum)
                session.machine.flush()
                if value is not None:
                    out.write(session.write(value) + "\n")
            except SessionExit as e:
                return e.status
            except ERRORS as e:
                session.machine.flush()
                err.write(f"error: {e}\n")
            out.flush()
    finally:
        session.close()


class _TextBytes(io.RawIOBase):
    """Binary sink that forwards to a text stream."""

    def __init__(self, text: TextIO):
        self.text = text

    def writable(self) -> bool:
        return True

    def write(self, b) -> int:
        self.text.write(bytes(b).decode("latin-1"))
        return len(b)

    def flush(self) -> None:
        self.text.flush()


class _InputReader:
    """Datums from a text stream, reading more lines only as needed."""

    def __init__(self, stream: TextIO):
        self.stream = stream
        self.buf = ""

    def next(self) -> Any:
        pending: ReadError | None = None
        while True:
            if self.buf.strip():
                try:
                    r = Reader(self.buf)
                    datum = r.read()
                    if datum is not READ_EOF:
                        self.buf = self.buf[r.pos:]
                        return datum
                    self.buf = ""
                except ReadError as e:
                    if not _incomplete(e):
                        self.buf = ""
                        raise
                    pending = e
            line = self.stream.readline()
            if not line:
                if pending is not None:
                    self.buf = ""
                    raise pending
                raise EOFError
            self.buf += line


def _incomplete(e: ReadError) -> bool:
    return "end of input" in str(e) or "unterminated" in str(e)


def main_loop(library: str = "plain") -> int:
    return run_session(sys.stdin, sys.stdout, library=library, stdin=sys.stdin.buffer,
                       stdout=sys.stdout.buffer, err=sys.stderr,
                       prompt="> " if sys.stdin.isatty() else "")
