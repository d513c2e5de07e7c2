"""Shared test utilities: random code DAGs, graph lifting, corpus parsing."""

from __future__ import annotations

import io
import random
from pathlib import Path

from ribvm.codegraph import CONST, GET, IF, JUMP, SET, CodeFactory, CodeNode, Proc
from ribvm.compiler import assign_symbol_indexes
from ribvm.container import Container, emit_container
from ribvm.datum import Symbol
from ribvm.decoder import decode
from ribvm.encoding import encode_program
from ribvm.pipeline import BuildOptions, build
from ribvm.store import PROCEDURE, RibStore, fx
from ribvm.vm import run_container

CORPUS = Path(__file__).parent / "corpus"
EXPECTED_MARK = ";;; expected output:"

SETTINGS = {
    "original-92": dict(encoding="original", rb=92, lzss=False),
    "optimal-92": dict(encoding="optimal", rb=92, lzss=False),
    "optimal-256": dict(encoding="optimal", rb=256, lzss=False),
    "optimal-186+lzss": dict(encoding="optimal", rb=186, lzss=True),
}


def expected_output(text: str) -> str:
    lines = text.split("\n")
    i = lines.index(EXPECTED_MARK)
    return "".join(line[4:] + "\n" for line in lines[i + 1:] if line.startswith(";;;"))


def run_source(source: str, stdin: bytes = b"", **opts) -> tuple[str, int]:
    b = build(source, BuildOptions(**opts))
    out = io.BytesIO()
    res = run_container(b.data, stdin=io.BytesIO(stdin), stdout=out)
    return out.getvalue().decode("latin-1"), res.status


# -- random DAGs -------------------------------------------------------------

def random_dag(rng: random.Random, depth: int = 4, n_syms: int = 12) -> CodeNode:
    """A random hash-consed code DAG shaped like compiler output.

    Join points come from ifs whose branches end in the same continuation;
    occasional reuse of earlier chains adds sharing no SHARE can reach.
    """
    f = CodeFactory()
    syms = [Symbol(f"s{i}") for i in range(n_syms)]
    built: list[CodeNode] = []

    def operand():
        r = rng.random()
        if r < 0.45:
            return rng.choice(syms)
        if r < 0.9:
            return rng.randrange(0, 40)
        return rng.randrange(0, 10 ** rng.randint(2, 9))

    def chain(d: int, k: CodeNode | None) -> CodeNode:
        if k is None:
            if built and rng.random() < 0.1:
                node = rng.choice(built)
            else:
                node = f.hash_cons(JUMP, operand(), None)
        else:
            node = k
        for _ in range(rng.randint(0, 5)):
            r = rng.random()
            if r < 0.15 and d > 0:
                join = node if rng.random() < 0.7 else None
                then = chain(d - 1, join)
                els = chain(d - 1, join) if join is not None else chain(d - 1, None)
                node = f.hash_cons(IF, then, els)
            elif r < 0.27 and d > 0:
                body = chain(d - 1, None)
                node = f.hash_cons(CONST, f.proc(rng.randrange(0, 9), body), node)
            else:
                op = rng.choice((JUMP, SET, GET, CONST))
                node = f.hash_cons(op, operand(), node)
            built.append(node)
        return node

    return chain(depth, None)


def encode_roundtrip(root: CodeNode, encoding: str, rb: int, lzss: bool, share_check=None):
    """Encode ``root``, pack, decode; returns (store, decoded, layout, encoded)."""
    layout = assign_symbol_indexes(root)
    enc = encode_program(root, layout, encoding, rb)
    c = Container(rb, enc.ribn, enc.table if enc.optimal else None, lzss)
    store = RibStore()
    d = decode(emit_container(c), store)
    return store, d, layout, enc


def lift(store: RibStore, program: int, symbols: list[int], names: list[Symbol],
         factory: CodeFactory | None = None) -> CodeNode:
    """Rebuild a code DAG from decoded instruction ribs (hash-consing again)."""
    f = factory or CodeFactory()
    sym_of = dict(zip(symbols, names))
    f0, f1, f2 = store.f0, store.f1, store.f2

    def is_proc(v: int) -> bool:
        return bool(v & 1) and f2[v >> 1] == fx(PROCEDURE) and bool(f0[v >> 1] & 1)

    def succ(r: int) -> list[int]:
        i = r >> 1
        op = f0[i] >> 1
        out = []
        if op != JUMP or f2[i] & 1:
            if f2[i] & 1:
                out.append(f2[i])
        if op == IF:
            out.append(f1[i])
        elif op == CONST and is_proc(f1[i]):
            out.append(f2[f0[f1[i] >> 1] >> 1])
        return out

    order: list[int] = []
    seen: set[int] = set()
    stack = [(program, False)]
    while stack:
        r, done = stack.pop()
        if done:
            order.append(r)
            continue
        if r in seen:
            continue
        seen.add(r)
        stack.append((r, True))
        stack.extend((s, False) for s in succ(r) if s not in seen)
    nodes: dict[int, CodeNode] = {}
    procs: dict[int, Proc] = {}
    for r in order:
        i = r >> 1
        op = f0[i] >> 1
        raw = f1[i]
        nxt = nodes[f2[i]] if f2[i] & 1 else None
        if op == IF:
            operand = nodes[raw]
        elif op == CONST and is_proc(raw):
            p = procs.get(raw)
            if p is None:
                code = f0[raw >> 1]
                p = f.proc(f0[code >> 1] >> 1, nodes[f2[code >> 1]])
                procs[raw] = p
            operand = p
        elif raw & 1:
            operand = sym_of[raw]
        else:
            operand = raw >> 1
        nodes[r] = f.hash_cons(op, operand, nxt)
    return nodes[program]


def decoded_node_count(store: RibStore, program: int) -> int:
    """Distinct instruction ribs reachable from ``program`` (procedure bodies included)."""
    f0, f1, f2 = store.f0, store.f1, store.f2
    seen: set[int] = set()
    todo = [program]
    while todo:
        r = todo.pop()
        if r in seen:
            continue
        seen.add(r)
        i = r >> 1
        op = f0[i] >> 1
        if f2[i] & 1:
            todo.append(f2[i])
        if op == IF:
            todo.append(f1[i])
        elif op == CONST and f1[i] & 1 and f2[f1[i] >> 1] == fx(PROCEDURE):
            todo.append(f2[f0[f1[i] >> 1] >> 1])
    return len(seen)
