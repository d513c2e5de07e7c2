"""Acceptance criteria 1 to 11, one test each.

Every test prints a single ``criterion N: PASS|FAIL`` line.  The module can
also be run directly: ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import io
import os
import random
import re
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ribvm import _kernels
from ribvm.cli import stats_rows
from ribvm.codegraph import JUMP, all_nodes, same_structure
from ribvm.container import Container
from ribvm.datum import Symbol
from ribvm.decoder import decode, decode_container
from ribvm.encoding import (INT, SYM, DecodingInstruction, Kind, char_to_code, decode_instructions,
                            expressible_copy, original_table, vlq_decode)
from ribvm.lzss import SIZE_BASES, compress_with, decode_backpointer, decompress
from ribvm.pipeline import BuildOptions, build, data_file
from ribvm.store import RibStore
from ribvm.vm import run_container

from helpers import (CORPUS, SETTINGS, decoded_node_count, encode_roundtrip, expected_output,
                     lift, random_dag, run_source)

GOLDEN = Path(__file__).parent / "golden"


def report(n: int, check) -> None:
    """Run ``check`` and print its verdict; failures are re-raised."""
    t0 = time.perf_counter()
    try:
        detail = check()
    except BaseException as e:
        print(f"criterion {n}: FAIL ({type(e).__name__}: {e})".splitlines()[0], flush=True)
        raise
    print(f"criterion {n}: PASS ({time.perf_counter() - t0:.2f}s) {detail or ''}".rstrip(),
          flush=True)


@pytest.fixture
def verdict(capsys):
    def run(n, check):
        with capsys.disabled():
            print()
            report(n, check)
    return run


# -- 1. codec conformance -------------------------------------------------------------

def criterion_1() -> str:
    t0 = time.perf_counter()
    table = original_table()
    assert decode_instructions([42], table) == [DecodingInstruction(Kind.LINK0, SYM, 19)]
    assert decode_instructions([91], table) == [DecodingInstruction(Kind.MERGE4)]
    # long range 50..55 at rb=92: first code 53 carries the high digit, 4 the low one
    assert vlq_decode([53, 4], 0, 50, 92) == (142, 2)
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    return "42 -> call sym 19, 91 -> if-merge, [53,4] -> 142"


def test_criterion_1(verdict):
    verdict(1, criterion_1)


# -- 2. round-trip property suite -----------------------------------------------------

def criterion_2() -> str:
    t0 = time.perf_counter()
    failures = 0
    for seed in range(500):
        root = random_dag(random.Random(seed))
        for opts in SETTINGS.values():
            store, d, layout, enc = encode_roundtrip(root, **opts)
            ok = (same_structure(lift(store, d.program, d.symbols, layout.symbols), root)
                  and decoded_node_count(store, d.program) == expressible_copy(root, enc.optimal))
            failures += not ok
    for name, opts in SETTINGS.items():
        b = build("", BuildOptions(prune=False, **opts))
        store = RibStore()
        d = decode(b.data, store)
        root = b.compiled.root
        ok = (same_structure(lift(store, d.program, d.symbols, b.compiled.layout.symbols), root)
              and decoded_node_count(store, d.program) == expressible_copy(root, b.encoded.optimal))
        failures += not ok
    elapsed = time.perf_counter() - t0
    assert failures == 0, f"{failures} round-trip failures"
    assert elapsed < 60, f"took {elapsed:.1f}s"
    return "500 DAGs + library x 4 settings"


def test_criterion_2(verdict):
    verdict(2, criterion_2)


# -- 3. sharing vs tail duplication ----------------------------------------------------

IF_PRELUDE = ("(define-primitive (##rib a b c)) (define-primitive (##id x)) "
              "(define-primitive (##< x y)) (define-primitive (##exit n)) ")


def if_chain(n: int) -> str:
    body = "".join(f"(if (##< x {i}) (##exit 1) (##exit 2))" for i in range(n))
    return IF_PRELUDE + f"(define (f x) {body} x) (##exit (f 99))"


def criterion_3() -> str:
    def codes(n, **opts):
        return build(if_chain(n), BuildOptions(library="none", **opts)).code_count

    fit = {n: codes(n, encoding="optimal", rb=256) for n in (2, 3, 4)}
    c = sum(n * y for n, y in fit.items()) / sum(n * n for n in fit)
    opt10 = codes(10, encoding="optimal", rb=256)
    orig10 = codes(10, encoding="original", rb=92)
    assert opt10 <= 1.5 * c * 10, (opt10, c)
    assert orig10 > 2 ** 8, orig10
    return f"c={c:.2f}: optimal(10)={opt10} <= {1.5 * c * 10:.0f}, original(10)={orig10} > 256"


def test_criterion_3(verdict):
    verdict(3, criterion_3)


# -- 4. LZSS ------------------------------------------------------------------------------

def criterion_4() -> str:
    rb = 186
    rng = random.Random(4)
    for sb in SIZE_BASES:
        for _ in range(1000):
            alphabet = rng.randint(1, rb)
            codes = [rng.randrange(alphabet) for _ in range(rng.randrange(300))]
            packed = compress_with(codes, rb, sb)
            assert decompress(packed, rb, sb, len(codes)) == codes
            assert len(packed) <= len(codes)
    assert decode_backpointer(200, 37, 186, 9) == (402, 6)
    lib = build("", BuildOptions(rb=rb, prune=False))
    codes = lib.encoded.ribn
    best = len(codes)
    for sb in SIZE_BASES:
        packed = compress_with(codes, rb, sb)
        assert decompress(packed, rb, sb, len(codes)) == codes
        best = min(best, len(packed))
    assert best < len(codes)
    return f"library {len(codes)} -> {best} bytes at rb=186"


def test_criterion_4(verdict):
    verdict(4, criterion_4)


# -- 5. size orderings ---------------------------------------------------------------------

def primitive_sites(b) -> int:
    prims = {Symbol(p) for p in b.compiled.primitives}
    return sum(1 for node in all_nodes(b.compiled.root)
               if node.op == JUMP and isinstance(node.operand, Symbol) and node.operand in prims)


def criterion_5() -> str:
    rows = stats_rows(data_file("repl_subset.scm"))
    by = {(label, proto): stored for label, proto, _, stored, _ in rows}
    for proto in ("arity-check", "prim-no-arity"):
        o92, p92 = by["original-92", proto], by["optimal-92", proto]
        p256, lz = by["optimal-256", proto], by["optimal-186+lzss", proto]
        assert p256 <= p92 <= o92, (proto, p256, p92, o92)
        assert lz <= p256, (proto, lz, p256)
    for label in ("original-92", "optimal-92", "optimal-256", "optimal-186+lzss"):
        assert by[label, "prim-no-arity"] <= by[label, "arity-check"]
    # every return is a tail call to ##id, so each program has primitive call
    # sites and the saving is strict; on small programs it equals the site count
    for src in (if_chain(3), if_chain(6), IF_PRELUDE + "(define (f x) x) (f 1)"):
        ac = build(src, BuildOptions(arity_check=True, library="none"))
        pna = build(src, BuildOptions(arity_check=True, prim_no_arity=True, library="none"))
        sites = primitive_sites(ac)
        assert sites > 0 and ac.code_count - pna.code_count == sites
    for label in ("original-92", "optimal-92", "optimal-256", "optimal-186+lzss"):
        assert by[label, "prim-no-arity"] < by[label, "arity-check"]
    cells = " ".join(f"{by[k, 'arity-check']}/{by[k, 'prim-no-arity']}"
                     for k in ("original-92", "optimal-92", "optimal-256", "optimal-186+lzss"))
    return f"bytes ac/pna: {cells}"


def test_criterion_5(verdict):
    verdict(5, criterion_5)


# -- 6. prim-no-arity exactness ----------------------------------------------------------

def straight_line(k: int) -> str:
    """``k`` primitive call sites in total: the two prelude closures, ##exit, k-3 additions."""
    e = "0"
    for i in range(k - 3):
        e = f"(##+ {i % 5} {e})"
    return ("(define-primitive (##rib a b c)) (define-primitive (##+ x y)) "
            f"(define-primitive (##exit n)) (##exit {e})")


def criterion_6() -> str:
    k = 25
    src = straight_line(k)
    diffs = []
    for opts in SETTINGS.values():
        ac = build(src, BuildOptions(library="none", arity_check=True, **opts))
        pna = build(src, BuildOptions(library="none", arity_check=True, prim_no_arity=True, **opts))
        assert primitive_sites(ac) == k
        diffs.append(ac.code_count - pna.code_count)
    assert diffs == [k] * len(SETTINGS), diffs
    return f"{k} sites -> {k} fewer codes in every setting"


def test_criterion_6(verdict):
    verdict(6, criterion_6)


# -- 7. VM correctness -----------------------------------------------------------------------

def ref_fib(n: int) -> int:
    return n if n < 2 else ref_fib(n - 1) + ref_fib(n - 2)


def ref_tak(x: int, y: int, z: int) -> int:
    return z if not y < x else ref_tak(ref_tak(x - 1, y, z), ref_tak(y - 1, z, x), ref_tak(z - 1, x, y))


def ref_ack(m: int, n: int) -> int:
    if m == 0:
        return n + 1
    if n == 0:
        return ref_ack(m - 1, 1)
    return ref_ack(m - 1, ref_ack(m, n - 1))


BENCHMARKS = [
    ("(define (fib n) (if (< n 2) n (+ (fib (- n 1)) (fib (- n 2))))) (display (fib 20))",
     lambda: ref_fib(20), 6765),
    ("(define (tak x y z) (if (not (< y x)) z"
     " (tak (tak (- x 1) y z) (tak (- y 1) z x) (tak (- z 1) x y)))) (display (tak 18 12 6))",
     lambda: ref_tak(18, 12, 6), 7),
    ("(define (ack m n) (cond ((= m 0) (+ n 1)) ((= n 0) (ack (- m 1) 1))"
     " (else (ack (- m 1) (ack m (- n 1)))))) (display (ack 2 3))",
     lambda: ref_ack(2, 3), 9),
]


def criterion_7() -> str:
    times = []
    for src, ref, want in BENCHMARKS:
        assert ref() == want
        outs = set()
        for opts in SETTINGS.values():
            t0 = time.perf_counter()
            outs.add(run_source(src, **opts))
            elapsed = time.perf_counter() - t0
            assert elapsed < 10, f"{elapsed:.1f}s"
            times.append(elapsed)
        assert outs == {(str(want), 0)}, outs
    return f"slowest run {max(times):.2f}s ({_kernels.BACKEND})"


def test_criterion_7(verdict):
    verdict(7, criterion_7)


# -- 8. library behavior corpus -----------------------------------------------------------

def criterion_8() -> str:
    files = sorted(CORPUS.glob("*.scm"))
    cwd = os.getcwd()
    os.chdir(CORPUS)
    try:
        for library in ("plain", "tc"):
            for path in files:
                text = path.read_text()
                assert run_source(text, library=library) == (expected_output(text), 0), path.name
    finally:
        os.chdir(cwd)
    rng = random.Random(8)
    lines, want = [], []
    for _ in range(40):
        a, b = ("".join(rng.choice("ab Z~") for _ in range(rng.randrange(4))) for _ in range(2))
        lines.append(f'(display (list (string<? "{a}" "{b}") (string=? "{a}" "{b}")))')
        want.append(f"({'#t' if a < b else '#f'} {'#t' if a == b else '#f'})")
        if a:
            k = rng.randrange(len(a))
            lines.append(f'(display (char->integer (string-ref "{a}" {k})))')
            want.append(str(ord(a[k])))
    assert run_source(" ".join(lines)) == ("".join(want), 0)
    return f"{len(files)} corpus files x 2 libraries + string oracle"


def test_criterion_8(verdict):
    verdict(8, criterion_8)


# -- 9. REPL session -------------------------------------------------------------------------

def criterion_9() -> str:
    from ribvm.repl import run_session
    name = "arith.scm"
    text = (CORPUS / name).read_text()
    session = (f"(define (sq x) (* x x))\n(sq 12)\n(car 5\n)\n(undefined-proc 1)\n"
               f'(load "{name}")\n(sq 3)\n')
    out = io.StringIO()
    cwd = os.getcwd()
    os.chdir(CORPUS)
    try:
        status = run_session(io.StringIO(session), out, library="tc", prompt="")
    finally:
        os.chdir(cwd)
    got = out.getvalue()
    assert status == 0
    assert got.startswith("144\n")
    assert got.count("error:") == 2
    assert expected_output(text) in got
    assert got.endswith("9\n\n")
    return "define/use, errors survived, load matches expected output"


def test_criterion_9(verdict):
    verdict(9, criterion_9)


# -- 10. host templater golden outputs ---------------------------------------------------------

def criterion_10() -> str:
    from test_templater import GOLDEN_CASES, TEMPLATE
    for name, (src, opts) in sorted(GOLDEN_CASES.items()):
        assert build(src, opts, TEMPLATE).host_text == (GOLDEN / name).read_text(), name
    off = (GOLDEN / "stdio_off_original92.c").read_text()
    on = (GOLDEN / "stdio_on_optimal256.c").read_text()
    assert "#include <stdio.h>" not in off and "#include <stdio.h>" in on
    src, opts = GOLDEN_CASES["stdio_off_original92.c"]
    b = build(src, opts, TEMPLATE)
    text = re.search(r'ribn = "([^"]*)";', b.host_text).group(1)
    codes = [char_to_code(ch, 92) for ch in text]
    store = RibStore()
    d = decode_container(Container(92, codes), store)
    assert same_structure(lift(store, d.program, d.symbols, b.compiled.layout.symbols), b.compiled.root)
    return f"{len(GOLDEN_CASES)} golden files, encode 92 round-trips"


def test_criterion_10(verdict):
    verdict(10, criterion_10)


# -- 11. GC robustness --------------------------------------------------------------------------

def criterion_11() -> str:
    n = 10 ** 6
    live = []
    real = _kernels.gc_mark_sweep

    def spy(*args):
        res = real(*args)
        live.append(res[0])
        return res

    _kernels.gc_mark_sweep = spy
    try:
        b = build(f"(define (loop i) (if (< i {n}) (loop (+ i 1)) i)) (display (loop 0))")
        out = io.BytesIO()
        run_container(b.data, RibStore(capacity=1 << 16, initial=1 << 16),
                      stdout=out, stdin=io.BytesIO())
    finally:
        _kernels.gc_mark_sweep = real
    assert out.getvalue() == str(n).encode()
    assert len(live) >= 2 and max(live[1:]) <= live[0] + 16, live[:5]
    return f"{len(live)} collections, live set {min(live)}..{max(live)} ribs"


def test_criterion_11(verdict):
    verdict(11, criterion_11)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


if __name__ == "__main__":
    failed = 0
    for i, check in enumerate(CRITERIA, 1):
        try:
            report(i, check)
        except Exception:
            failed += 1
    sys.exit(1 if failed else 0)
