"""Command line: ``ribvm compile|run|repl|stats``.

Exit codes: 0 success, 1 usage, 2 compile error, 3 decode error,
4 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .codegraph import count_nodes, tree_size
from .compiler import CompileError
from .container import ContainerError
from .decoder import DecodeError
from .encoding import EncodeError
from .expander import ExpandError
from .features import FeatureError
from .lzss import LzssError
from .pipeline import Build, BuildOptions, ConfigError, build
from .reader import ReadError
from .store import DEFAULT_CAPACITY, RibStore
from .templater import TemplateError
from .vm import VMError, run_container

EXIT_OK, EXIT_USAGE, EXIT_COMPILE, EXIT_DECODE, EXIT_RUNTIME = 0, 1, 2, 3, 4
COMPILE_ERRORS = (ReadError, ExpandError, CompileError, FeatureError, EncodeError, TemplateError)

# settings compared by ``stats``: (label, encoding, rb, lzss)
STATS_SETTINGS = (
    ("original-92", "original", 92, False),
    ("optimal-92", "optimal", 92, False),
    ("optimal-256", "optimal", 256, False),
    ("optimal-186+lzss", "optimal", 186, True),
)
DUPLICATION_WARN_FACTOR = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _build_flags(p: argparse.ArgumentParser, matrix: bool = False) -> None:
    if not matrix:
        p.add_argument("--encoding", choices=("optimal", "original"), default="optimal")
        p.add_argument("--rb", type=int, default=None,
                       help="RIBN base (default 256, or 92 for the original encoding, 186 with --lzss)")
        p.add_argument("--lzss", action="store_true", help="compress the RIBN")
        p.add_argument("--sb", type=int, default=None, help="LZSS size base (default: best of 7..13)")
        ac = p.add_mutually_exclusive_group()
        ac.add_argument("--arity-check", dest="arity_check", action="store_const", const=True,
                        default=None)
        ac.add_argument("--no-arity-check", dest="arity_check", action="store_const", const=False)
        p.add_argument("--prim-no-arity", action="store_true",
                       help="do not push argument counts at primitive call sites")
    p.add_argument("--library", default="plain", help="plain, tc (type-checked) or a file path")
    p.add_argument("-f+", dest="enable", action="append", default=[], metavar="NAME",
                   help="force a feature on")
    p.add_argument("-f-", dest="disable", action="append", default=[], metavar="NAME",
                   help="force a feature off")
    p.add_argument("--keep-names", action="store_true", help="keep every symbol name in the RIBN")


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ribvm", description="Compile and run Scheme programs on a compact rib VM.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    c = sub.add_parser("compile", help="compile a source file to a container")
    c.add_argument("source")
    c.add_argument("-o", "--output", help="container path (default: SOURCE with .rvm)")
    c.add_argument("--host-template", help="annotated host source to specialize")
    c.add_argument("--host-output", help="where to write the specialized host source")
    _build_flags(c)

    r = sub.add_parser("run", help="run a compiled container")
    r.add_argument("container")
    r.add_argument("--heap", type=int, default=DEFAULT_CAPACITY, help="heap limit in ribs")

    x = sub.add_parser("exec", help="compile and run a source file in one step")
    x.add_argument("source")
    x.add_argument("--heap", type=int, default=DEFAULT_CAPACITY, help="heap limit in ribs")
    _build_flags(x)

    i = sub.add_parser("repl", help="interactive session")
    i.add_argument("--library", default="plain", help="plain, tc or a file path")

    s = sub.add_parser("stats", help="RIBN sizes across encodings and calling protocols")
    s.add_argument("source")
    _build_flags(s, matrix=True)
    return p


def options_from(args: argparse.Namespace) -> BuildOptions:
    rb = args.rb
    if rb is None:
        rb = 92 if args.encoding == "original" else 186 if args.lzss else 256
    return BuildOptions(encoding=args.encoding, rb=rb, lzss=args.lzss, sb=args.sb,
                        arity_check=args.arity_check, prim_no_arity=args.prim_no_arity,
                        library=args.library, enable=tuple(args.enable),
                        disable=tuple(args.disable), keep_names=args.keep_names)


def duplication_warning(b: Build) -> str | None:
    """Text of a warning when the original encoding had to copy shared tails."""
    if b.encoded.optimal:
        return None
    dag = count_nodes(b.compiled.root)
    tree = tree_size(b.compiled.root)
    if tree > DUPLICATION_WARN_FACTOR * dag:
        return (f"warning: the original encoding duplicates shared tails: {dag} instructions "
                f"grew to {tree}; the optimal encoding shares them")
    return None


def _read_source(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def cmd_compile(args, out, err) -> int:
    source = _read_source(args.source)
    template = _read_source(args.host_template) if args.host_template else None
    b = build(source, options_from(args), template)
    warn = duplication_warning(b)
    if warn:
        err.write(warn + "\n")
    target = Path(args.output) if args.output else Path(args.source).with_suffix(".rvm")
    target.write_bytes(b.data)
    if b.host_text is not None:
        host_out = args.host_output or str(Path(args.host_template).with_suffix(".out"
                                                                           + Path(args.host_template).suffix))
        Path(host_out).write_text(b.host_text)
        out.write(f"host source: {host_out}\n")
    out.write(f"{target}: {b.size_report()}\n")
    return EXIT_OK


def _run_bytes(data: bytes, heap: int) -> int:
    sys.stdout.flush()
    result = run_container(data, RibStore(capacity=heap), stdin=sys.stdin.buffer,
                           stdout=sys.stdout.buffer)
    return result.status


def cmd_run(args, out, err) -> int:
    try:
        data = Path(args.container).read_bytes()
    except OSError as e:
        raise UsageError(f"cannot read {args.container}: {e.strerror}") from None
    return _run_bytes(data, args.heap)


def cmd_exec(args, out, err) -> int:
    b = build(_read_source(args.source), options_from(args))
    return _run_bytes(b.data, args.heap)


def cmd_repl(args, out, err) -> int:
    from .repl import main_loop
    return main_loop(args.library)


def stats_rows(source: str, library: str = "plain", enable=(), disable=(),
               keep_names: bool = False) -> list[tuple[str, str, int, int, int]]:
    """(setting, protocol, codes, stored bytes, container bytes) for the size matrix."""
    rows = []
    for label, enc, rb, lz in STATS_SETTINGS:
        for proto, pna in (("arity-check", False), ("prim-no-arity", True)):
            opts = BuildOptions(encoding=enc, rb=rb, lzss=lz, arity_check=True, prim_no_arity=pna,
                                library=library, enable=tuple(enable), disable=tuple(disable),
                                keep_names=keep_names)
            b = build(source, opts)
            stored = b.container.compressed_size if lz else b.code_count
            rows.append((label, proto, b.code_count, stored, len(b.data)))
    return rows


def cmd_stats(args, out, err) -> int:
    rows = stats_rows(_read_source(args.source), args.library, args.enable, args.disable,
                      args.keep_names)
    out.write(f"{'setting':<18} {'protocol':<14} {'codes':>7} {'stored':>7} {'file':>7}\n")
    for label, proto, codes, stored, total in rows:
        out.write(f"{label:<18} {proto:<14} {codes:>7} {stored:>7} {total:>7}\n")
    return EXIT_OK


COMMANDS = {"compile": cmd_compile, "run": cmd_run, "exec": cmd_exec, "repl": cmd_repl,
            "stats": cmd_stats}


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required (compile, run, exec, repl or stats)")
        return COMMANDS[args.command](args, out, err)
    except UsageError as e:
        err.write(f"usage error: {e}\n")
        return EXIT_USAGE
    except ConfigError as e:
        err.write(f"usage error: {e}\n")
        return EXIT_USAGE
    except COMPILE_ERRORS as e:
        where = getattr(args, "source", None)
        err.write(f"{where + ': ' if where else ''}compile error: {e}\n")
        return EXIT_COMPILE
    except (DecodeError, ContainerError, LzssError) as e:
        err.write(f"decode error: {e}\n")
        return EXIT_DECODE
    except VMError as e:
        sys.stdout.flush()
        err.write(f"runtime error: {e}\n")
        return EXIT_RUNTIME
    except RecursionError:
        err.write("runtime error: host recursion limit reached\n")
        return EXIT_RUNTIME
    except OSError as e:
        err.write(f"error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
