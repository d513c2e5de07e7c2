"""Source text to container bytes, with every intermediate kept for inspection."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from .compiler import CompiledProgram, CompileOptions, compile_program
from .container import Container, emit_container
from .encoding import EncodedProgram, encode_program
from .expander import CoreForm, Expander
from .features import FeatureSet
from .reader import read_all
from .templater import Template, declare, parse_annotations, render

LIBRARIES = {
    "plain": ("fast.scm", "core.scm"),
    "tc": ("core.scm", "checks.scm"),
    "none": (),
}


class ConfigError(ValueError):
    pass


def library_source(variant: str = "plain") -> str:
    """Text of a bundled library variant, or of a library file given by path."""
    if variant in LIBRARIES:
        pkg = resources.files("ribvm") / "library"
        return "\n".join((pkg / name).read_text() for name in LIBRARIES[variant])
    path = Path(variant)
    if path.is_file():
        return path.read_text()
    raise ConfigError(f"unknown library {variant!r} (expected plain, tc or a file path)")


def data_file(name: str) -> str:
    return (resources.files("ribvm") / "data" / name).read_text()


@dataclass
class BuildOptions:
    encoding: str = "optimal"          # optimal | original
    rb: int = 256
    lzss: bool = False
    sb: int | None = None              # None: search 7..13
    arity_check: bool | None = None
    prim_no_arity: bool = False
    library: str = "plain"
    enable: Sequence[str] = ()
    disable: Sequence[str] = ()
    keep_names: bool = False
    prune: bool = True

    def validate(self) -> None:
        if self.encoding not in ("optimal", "original"):
            raise ConfigError(f"unknown encoding {self.encoding!r}")
        if self.encoding == "original" and self.rb != 92:
            raise ConfigError("the original encoding uses rb=92")
        if not 13 <= self.rb <= 256:
            raise ConfigError(f"rb={self.rb} outside 13..256")
        if self.lzss and (self.encoding != "optimal" or self.rb > 250):
            raise ConfigError("LZSS needs the optimal encoding and rb <= 250")
        clash = set(self.enable) & set(self.disable)
        if clash:
            raise ConfigError(f"feature(s) both enabled and disabled: {', '.join(sorted(clash))}")

    def compile_options(self) -> CompileOptions:
        return CompileOptions(arity_check=self.arity_check, prim_no_arity=self.prim_no_arity,
                              enable=frozenset(self.enable), disable=frozenset(self.disable),
                              prune=self.prune, keep_names=self.keep_names)


@dataclass
class Build:
    options: BuildOptions
    compiled: CompiledProgram
    encoded: EncodedProgram
    container: Container
    data: bytes
    library_forms: list[CoreForm] = field(default_factory=list, repr=False)
    host_text: str | None = None

    @property
    def code_count(self) -> int:
        return len(self.encoded.ribn)

    def size_report(self) -> str:
        c = self.container
        parts = [f"codes={self.code_count}", f"symbols={len(self.compiled.layout)}",
                 f"bytes={len(self.data)}"]
        if c.lzss:
            parts.append(f"compressed={c.compressed_size} (sb={c.sb})")
        return " ".join(parts)


def expand_source(source: str, library: str = "plain",
                  expander: Expander | None = None) -> tuple[list[CoreForm], list[CoreForm], Expander]:
    ex = expander if expander is not None else Expander(FeatureSet())
    lib = ex.expand_program(read_all(library_source(library)))
    prog = ex.expand_program(read_all(source))
    return prog, lib, ex


def build(source: str, options: BuildOptions | None = None,
          host_template: str | Template | None = None) -> Build:
    """Compile and package ``source``; also specialize ``host_template`` if given.

    A template's primitive annotations are declared before the library is
    expanded, and their order fixes the runtime primitive numbering.
    """
    opts = options or BuildOptions()
    opts.validate()
    ex = Expander(FeatureSet())
    tmpl = order = None
    if host_template is not None:
        tmpl = host_template if isinstance(host_template, Template) else parse_annotations(host_template)
        order = declare(tmpl, ex.features)
    prog, lib, ex = expand_source(source, opts.library, ex)
    copts = opts.compile_options()
    if order is not None:
        copts.primitive_order = order + [p for p in ex.features.primitives if p not in order]
    compiled = compile_program(prog, lib, ex.features, copts)
    b = package(compiled, opts, lib)
    if tmpl is not None:
        b.host_text = render(tmpl, b)
    return b


def package(compiled: CompiledProgram, opts: BuildOptions, lib: list[CoreForm] | None = None) -> Build:
    encoded = encode_program(compiled.root, compiled.layout, opts.encoding, opts.rb)
    container = Container(opts.rb, encoded.ribn, encoded.table if encoded.optimal else None,
                          opts.lzss, opts.sb, compiled.arity_check, compiled.prim_no_arity,
                          compiled.prim_map)
    data = emit_container(container)
    return Build(opts, compiled, encoded, container, data, lib or [])
