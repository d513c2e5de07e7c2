"""A compact Scheme toolchain and rib virtual machine.

Typical use::

    from ribvm import build, run_container
    b = build('(display "hi")')
    run_container(b.data)
"""

from ._kernels import BACKEND
from .compiler import CompileError, CompileOptions, compile_program
from .container import Container, emit_container, parse_container
from .decoder import DecodeError, decode
from .encoding import EncodingTable, encode_program, original_table
from .lzss import compress, decompress
from .pipeline import Build, BuildOptions, ConfigError, build
from .reader import ReadError, read_all
from .repl import Session
from .store import RibStore
from .templater import TemplateError, parse_annotations, specialize
from .vm import HeapOverflow, Machine, RunResult, VMError, run_container, write_value

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Build", "BuildOptions", "CompileError", "CompileOptions", "ConfigError",
    "Container", "DecodeError", "EncodingTable", "HeapOverflow", "Machine", "ReadError",
    "RibStore", "RunResult", "Session", "TemplateError", "VMError", "build", "compile_program",
    "compress", "decode", "decompress", "emit_container", "encode_program", "original_table",
    "parse_annotations", "parse_container", "read_all", "run_container", "specialize",
    "write_value",
]
