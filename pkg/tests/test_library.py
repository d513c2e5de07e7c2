import random

import pytest

from ribvm.pipeline import ConfigError, library_source
from ribvm.vm import VMError

from helpers import CORPUS, expected_output, run_source

CORPUS_FILES = sorted(p.name for p in CORPUS.glob("*.scm"))


@pytest.mark.parametrize("library", ["plain", "tc"])
@pytest.mark.parametrize("name", CORPUS_FILES)
def test_corpus(name, library, monkeypatch):
    monkeypatch.chdir(CORPUS)
    text = (CORPUS / name).read_text()
    out, status = run_source(text, library=library)
    assert status == 0
    assert out == expected_output(text)


def test_unknown_library():
    with pytest.raises(ConfigError):
        library_source("nope")


def test_library_from_path(tmp_path):
    lib = tmp_path / "lib.scm"
    lib.write_text("(define-primitive (##rib a b c)) (define-primitive (putchar c))\n"
                   "(define (bang) (putchar 33))")
    assert run_source("(bang)", library=str(lib)) == ("!", 0)


def _py_string_cmp(a: str, b: str) -> list[bool]:
    return [a < b, a > b, a == b, a <= b, a >= b]


def _scheme_bools(values) -> str:
    return "(" + " ".join("#t" if v else "#f" for v in values) + ")"


def test_strings_against_oracle():
    rng = random.Random(12)
    alphabet = "ab Z~"
    pairs = [("".join(rng.choice(alphabet) for _ in range(rng.randrange(4))),
              "".join(rng.choice(alphabet) for _ in range(rng.randrange(4)))) for _ in range(40)]
    lines, want = [], []
    for a, b in pairs:
        lines.append(f'(display (list (string<? "{a}" "{b}") (string>? "{a}" "{b}") '
                     f'(string=? "{a}" "{b}") (string<=? "{a}" "{b}") (string>=? "{a}" "{b}")))'
                     f" (newline)")
        want.append(_scheme_bools(_py_string_cmp(a, b)) + "\n")
        if a:
            k = rng.randrange(len(a))
            lines.append(f'(display (char->integer (string-ref "{a}" {k}))) '
                         f'(display (string-length "{a}")) (newline)')
            want.append(f"{ord(a[k])}{len(a)}\n")
    out, _ = run_source("\n".join(lines))
    assert out == "".join(want)


def test_fold_arithmetic_matches_two_argument_calls():
    rng = random.Random(5)
    pairs = [(rng.randrange(-10 ** 6, 10 ** 6), rng.randrange(-10 ** 6, 10 ** 6)) for _ in range(1000)]
    data = " ".join(f"({a} . {b})" for a, b in pairs)
    src = f"""
    (define (check p)
      (let ((a (car p)) (b (cdr p)) (add +) (sub -) (mul *))
        (if (and (= (+ a b) (add a b)) (= (- a b) (sub a b)) (= (* a b) (mul a b))
                 (= (+ a b 0) (fold add 0 (list a b))))
            0 1)))
    (display (fold + 0 (map check '({data}))))
    (display (+ {' '.join(str(a) for a, _ in pairs[:50])}))
    """
    out, _ = run_source(src)
    assert out == "0" + str(sum(a for a, _ in pairs[:50]))


def test_char_ordering_by_swap():
    out, _ = run_source("(display (list (char>? #\\b #\\a) (char<? #\\b #\\a) (char>=? #\\a #\\a)))")
    assert out == "(#t #f #t)"


def test_ports_are_disjoint_types(tmp_path):
    path = tmp_path / "p.txt"
    path.write_text("x")
    preds = ("boolean? null? pair? number? char? string? symbol? vector? procedure? "
             "input-port? output-port?")
    src = f"""
    (define preds (list {preds}))
    (define (row x) (for-each (lambda (p) (display (if (p x) 1 0))) preds) (newline))
    (row (current-input-port))
    (row (current-output-port))
    (row (open-input-file "{path}"))
    """
    out, _ = run_source(src)
    assert out == "00000000010\n00000000001\n00000000010\n"


def test_eof_object_is_not_any_other_type():
    preds = "boolean? null? pair? number? char? string? symbol? vector? procedure? input-port? output-port?"
    src = f"(define e (read-char)) (for-each (lambda (p) (display (if (p e) 1 0))) (list {preds})) (display (eof-object? e))"
    assert run_source(src)[0] == "00000000000#t"


def test_type_checked_library_reports_errors():
    with pytest.raises(VMError, match="car"):
        run_source("(car 5)", library="tc")


def test_peek_then_read():
    src = "(write (list (peek-char) (peek-char) (read-char) (read-char) (peek-char)))"
    assert run_source(src, stdin=b"ab")[0] == "(#\\a #\\a #\\a #\\b #<eof>)"
