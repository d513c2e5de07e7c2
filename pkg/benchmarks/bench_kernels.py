"""Compare the pure-Python and compiled kernels.

Times the three hot kernels on fixed workloads: the VM dispatch loop, the
mark-sweep collector (driven by an allocation-heavy program in a small heap)
and LZSS compression/decompression of the encoded library.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]
"""

from __future__ import annotations

import argparse
import io
import statistics
import sys
import time

from ribvm import _kernels
from ribvm.lzss import SIZE_BASES
from ribvm.pipeline import BuildOptions, build
from ribvm.store import RibStore
from ribvm.vm import run_container

FIB = "(define (fib n) (if (< n 2) n (+ (fib (- n 1)) (fib (- n 2))))) (display (fib {n}))"
CONS = """(define (build n acc) (if (= n 0) acc (build (- n 1) (cons n acc))))
(define (churn k) (if (> k 0) (begin (build 2000 '()) (churn (- k 1))) 0))
(display (churn {k}))"""


def _run(data: bytes, heap: int | None = None) -> None:
    store = RibStore(capacity=heap, initial=heap) if heap else RibStore()
    run_container(data, store, stdout=io.BytesIO(), stdin=io.BytesIO())


def workloads(quick: bool):
    fib = build(FIB.format(n=18 if quick else 22)).data
    churn = build(CONS.format(k=20 if quick else 100)).data
    lib = build("", BuildOptions(rb=186, prune=False)).encoded.ribn
    raw = bytes(lib)

    def lzss_round():
        for sb in SIZE_BASES:
            packed = _kernels.lzss_compress(raw, 186, sb)
            _kernels.lzss_decompress(packed, 186, sb, len(raw))

    return [
        ("execute: fib", lambda: _run(fib)),
        ("gc: cons churn, 16K heap", lambda: _run(churn, 1 << 14)),
        ("lzss: library, sb 7..13", lzss_round),
    ]


def timeit(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args(argv)

    backends = ["python"]
    try:
        from ribvm import _ckernels  # noqa: F401
        backends.append("cython")
    except ImportError:
        print("compiled kernels not built; timing the pure-Python backend only")

    jobs = workloads(args.quick)
    results: dict[tuple[str, str], float] = {}
    for name in backends:
        _kernels.use_backend(name)
        for label, fn in jobs:
            results[label, name] = timeit(fn, args.repeat)

    print(f"{'kernel':<28}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for label, _ in jobs:
        row = f"{label:<28}" + "".join(f"{results[label, b]:>11.3f}s" for b in backends)
        if len(backends) > 1:
            row += f"{results[label, 'python'] / results[label, 'cython']:>11.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())
