import io

import pytest

from ribvm import _kernels
from ribvm.compiler import CompileError
from ribvm.pipeline import BuildOptions, build
from ribvm.store import NIL, RibStore, fx
from ribvm.vm import HeapOverflow, VMError, run_container, write_value

from helpers import SETTINGS, run_source

FIB = "(define (fib n) (if (< n 2) n (+ (fib (- n 1)) (fib (- n 2)))))"
TAK = """(define (tak x y z)
  (if (not (< y x)) z (tak (tak (- x 1) y z) (tak (- y 1) z x) (tak (- z 1) x y))))"""
ACK = """(define (ack m n)
  (cond ((= m 0) (+ n 1)) ((= n 0) (ack (- m 1) 1)) (else (ack (- m 1) (ack m (- n 1))))))"""


def fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def tak(x, y, z):
    while y < x:
        x, y, z = tak(x - 1, y, z), tak(y - 1, z, x), tak(z - 1, x, y)
    return z


def ack(m, n):
    if m == 0:
        return n + 1
    if n == 0:
        return ack(m - 1, 1)
    return ack(m - 1, ack(m, n - 1))


def test_reference_implementations():
    assert (fib(10), fib(20)) == (55, 6765)
    assert tak(18, 12, 6) == 7
    assert ack(2, 3) == 9


@pytest.mark.parametrize("src, expr, want", [
    (FIB, "(fib 10)", fib(10)),
    (FIB, "(fib 15)", fib(15)),
    (TAK, "(tak 12 8 4)", tak(12, 8, 4)),
    (ACK, "(ack 2 3)", ack(2, 3)),
])
def test_benchmarks(backend, src, expr, want):
    out, status = run_source(f"{src} (display {expr}) (newline)")
    assert (out, status) == (f"{want}\n", 0)


def test_putchar():
    assert run_source("(define-primitive (putchar c)) (putchar 65)", library="none") == ("A", 0)


def test_abs_procedure():
    src = "(define (abs2 x) (if (< x 0) (- 0 x) x)) (display (abs2 -4))"
    assert run_source(src) == ("4", 0)


def test_rest_parameters(backend):
    out, _ = run_source("(write ((lambda (a . r) r) 1 2 3)) (write ((lambda r r)))")
    assert out == "(2 3)()"


@pytest.mark.parametrize("src, fragment", [
    ("((car (list (lambda (a b) a))) 1)", "expected 2"),
    ("(define (f a) a) (define g f) (g 1 2)", "g: expected 1"),
    ("(define g 5) (g 1)", "non-procedure"),
    ("(quotient 1 0)", "division by zero"),
    ("(error \"boom:\" 42)", "boom: 42"),
])
def test_runtime_errors(backend, src, fragment):
    b = build(src, BuildOptions(arity_check=True, keep_names=True))
    with pytest.raises(VMError) as e:
        run_container(b.data, stdout=io.BytesIO(), stdin=io.BytesIO())
    assert fragment in str(e.value)


def test_anonymous_global_in_error():
    b = build("(define (f a) a) (define g f) (g 1 2)", BuildOptions(arity_check=True))
    with pytest.raises(VMError, match="global #[0-9]+: expected 1"):
        run_container(b.data, stdout=io.BytesIO(), stdin=io.BytesIO())


def test_static_arity_mismatch_is_a_compile_error():
    with pytest.raises(CompileError, match="f expects 1"):
        build("(define (f a) a) (f 1 2)")


def test_unbound_global(backend):
    b = build("(define (f) (g)) (define g #f) (f)")
    with pytest.raises(VMError, match="g"):
        run_container(b.data, stdout=io.BytesIO(), stdin=io.BytesIO())


def test_exit_status():
    assert run_source("(display 1) (exit 7) (display 2)")[1] == 7
    assert run_source("(display 1)")[1] == 0


def test_stdin_and_eof(backend):
    src = "(define (echo) (let ((c (read-char))) (if (eof-object? c) (display \"!\") (begin (write-char c) (echo))))) (echo)"
    assert run_source(src, stdin=b"hi\n")[0] == "hi\n!"
    assert run_source(src, stdin=b"")[0] == "!"


def test_file_io(backend, tmp_path):
    path = tmp_path / "f.txt"
    src = f"""
    (define o (open-output-file "{path}"))
    (write-char #\\z o) (write-char #\\q o)
    (close-output-port o) (close-output-port o)
    (define i (open-input-file "{path}"))
    (write (peek-char i)) (write (read-char i)) (write (read-char i)) (write (eof-object? (read-char i)))
    (close-input-port i) (close-input-port i)
    """
    assert run_source(src)[0] == "#\\z#\\z#\\q#t"
    assert path.read_bytes() == b"zq"


def test_missing_file_is_an_error():
    b = build('(open-input-file "/nonexistent/x")')
    with pytest.raises(VMError):
        run_container(b.data, stdout=io.BytesIO(), stdin=io.BytesIO())


def test_primitive_eqv_on_chars():
    src = "(write (##eqv? (integer->char 97) (integer->char 97))) (write (eqv? (integer->char 97) (integer->char 97)))"
    assert run_source(src)[0] == "#f#t"


def test_heap_overflow():
    b = build(f"{FIB} (define (build n) (if (= n 0) '() (cons n (build (- n 1))))) (display (length (build 100000)))")
    with pytest.raises(HeapOverflow, match="out of memory"):
        run_container(b.data, RibStore(capacity=20000), stdout=io.BytesIO(), stdin=io.BytesIO())


def test_tail_loop_constant_live_set(backend, monkeypatch):
    live = []
    real = _kernels.gc_mark_sweep

    def spy(*args):
        res = real(*args)
        live.append(res[0])
        return res

    monkeypatch.setattr(_kernels, "gc_mark_sweep", spy)
    n = 200_000 if backend == "pure" else 1_000_000
    src = f"(define (loop i) (if (< i {n}) (loop (+ i 1)) i)) (display (loop 0))"
    b = build(src)
    out = io.BytesIO()
    run_container(b.data, RibStore(capacity=1 << 16, initial=1 << 16), stdout=out, stdin=io.BytesIO())
    assert out.getvalue() == str(n).encode()
    assert len(live) >= 2
    assert max(live[1:]) <= live[0] + 16


def test_determinism():
    src = f"{TAK} (display (tak 12 8 4)) (write (list 1 \"a\" #\\b 'c))"
    b = build(src)
    outs = set()
    for _ in range(2):
        out = io.BytesIO()
        run_container(b.data, stdout=out, stdin=io.BytesIO())
        outs.add(out.getvalue())
    assert len(outs) == 1


def test_differential_across_settings():
    # output through putchar only, so that no rest parameter forces arity checking
    src = f"""{FIB} {ACK}
    (define (pr n) (if (< n 10) (putchar (+ 48 n))
                       (begin (pr (quotient n 10)) (putchar (+ 48 (remainder n 10))))))
    (pr (fib 12)) (putchar 32) (pr (ack 2 3))"""
    outs = {}
    for name, opts in SETTINGS.items():
        for ac in (True, False):
            for pna in (False, True):
                outs[name, ac, pna] = run_source(src, arity_check=ac, prim_no_arity=pna, **opts)
    assert set(outs.values()) == {("144 9", 0)}


def test_write_value():
    st = RibStore()
    lst = st.make_list([fx(1), st.make_string('a"b'), NIL])
    assert write_value(st, lst) == '(1 "a\\"b" ())'
    assert write_value(st, lst, display=True) == '(1 a"b ())'
    assert write_value(st, fx(-5)) == "-5"
