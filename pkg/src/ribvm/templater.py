"""Specialize annotated host source.

Annotations are ``@@(name args...)@@`` on one line (applying to that line)
or ``@@(name args...`` ... ``)@@`` spanning a block of lines.  Five kinds
are understood: feature, primitives, primitive, replace and location.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from .datum import NIL, Pair, Symbol, is_int, is_proper_list, to_pylist, write_datum
from .encoding import code_to_char, original_table
from .features import FeatureDef, FeatureError, FeatureSet, PrimitiveDef, eval_feature_expr
from .reader import ReadError, read_all

OPEN, CLOSE = "@@(", ")@@"
KINDS = ("feature", "primitives", "primitive", "replace", "location")


class TemplateError(ValueError):
    pass


@dataclass
class Annotation:
    name: str
    args: list[Any]
    start: int                    # first line (0-based)
    end: int                      # last line, inclusive
    inline: bool
    children: list["Annotation | int"] = field(default_factory=list)   # nodes or raw line numbers

    @property
    def inner(self) -> range:
        return range(self.start, self.end + 1) if self.inline else range(self.start + 1, self.end)


@dataclass
class Template:
    lines: list[str]
    root: list["Annotation | int"]

    def walk(self):
        todo = list(self.root)
        while todo:
            n = todo.pop(0)
            if isinstance(n, Annotation):
                yield n
                todo[0:0] = n.children


def _header(text: str, lineno: int) -> tuple[str, list[Any]]:
    try:
        items = read_all(text)
    except ReadError as e:
        raise TemplateError(f"line {lineno + 1}: bad annotation: {e}") from None
    if not items or not isinstance(items[0], Symbol):
        raise TemplateError(f"line {lineno + 1}: annotation needs a name")
    name = items[0].name
    if name not in KINDS:
        raise TemplateError(f"line {lineno + 1}: unknown annotation {name!r}")
    return name, items[1:]


def strip_inline(line: str) -> str:
    """The line with its inline annotation (and a comment marker left bare) removed."""
    i = line.find(OPEN)
    out = line[:i].rstrip()
    for marker in ("//", "#", ";;", "--"):
        if out.endswith(marker):
            out = out[: -len(marker)].rstrip()
            break
    return out


def parse_annotations(text: str) -> Template:
    lines = text.split("\n")
    root: list[Annotation | int] = []
    stack: list[Annotation] = []

    def add(node):
        (stack[-1].children if stack else root).append(node)

    for no, line in enumerate(lines):
        i = line.find(OPEN)
        if i >= 0:
            j = line.find(CLOSE, i + len(OPEN))
            if line.find(OPEN, i + 1) >= 0:
                raise TemplateError(f"line {no + 1}: more than one annotation on a line")
            if j >= 0:
                name, args = _header(line[i + len(OPEN):j], no)
                add(Annotation(name, args, no, no, True))
            else:
                name, args = _header(line[i + len(OPEN):], no)
                node = Annotation(name, args, no, -1, False)
                add(node)
                stack.append(node)
        elif CLOSE in line:
            if not stack:
                raise TemplateError(f"line {no + 1}: )@@ without an open annotation")
            stack.pop().end = no
        else:
            add(no)
    if stack:
        raise TemplateError(f"line {stack[-1].start + 1}: annotation {stack[-1].name} is never closed")
    return Template(lines, root)


# -- what a template declares ----------------------------------------------------

def _uses(args: list[Any]) -> tuple[str, ...]:
    out = []
    for a in args:
        if isinstance(a, Pair) and a.car == Symbol("use"):
            out.extend(x.name for x in to_pylist(a.cdr))
    return tuple(out)


def _prim_spec(node: Annotation) -> tuple[str, int]:
    spec = node.args[0] if node.args else None
    if not (isinstance(spec, Pair) and isinstance(spec.car, Symbol) and is_proper_list(spec)):
        raise TemplateError(f"line {node.start + 1}: primitive needs (name params...)")
    return spec.car.name, len(to_pylist(spec)) - 1


def declare(template: Template, features: FeatureSet) -> list[str]:
    """Record the template's primitives and features; return primitive names in template order."""
    order: list[str] = []
    for node in template.walk():
        if node.name == "primitive":
            name, n = _prim_spec(node)
            try:
                features.add_primitive(PrimitiveDef(name, n, None, _uses(node.args[1:])))
            except FeatureError as e:
                raise TemplateError(f"line {node.start + 1}: {e}") from None
            order.append(name)
        elif node.name == "feature" and node.args and isinstance(node.args[0], Symbol):
            name = node.args[0].name
            uses = _uses(node.args[1:])
            if name not in features.defined or uses:
                features.add_feature(FeatureDef(name, uses))
    return order


# -- replace expressions -------------------------------------------------------

@dataclass
class ReplaceEnv:
    values: dict[str, Any]
    codes: list[int]              # the RIBN (symbol section + instructions)
    rb: int
    stored: bytes | None = None   # compressed form when LZSS is on

    def evaluate(self, expr: Any) -> str:
        if isinstance(expr, Symbol):
            if expr.name not in self.values:
                raise TemplateError(f"unknown feature value {expr.name}")
            return _host(self.values[expr.name])
        if isinstance(expr, str):
            return expr
        if is_int(expr):
            return str(expr)
        if not (isinstance(expr, Pair) and isinstance(expr.car, Symbol) and is_proper_list(expr)):
            raise TemplateError(f"bad replace expression {write_datum(expr)}")
        op = expr.car.name
        args = to_pylist(expr.cdr)
        fn = _PROCS.get(op)
        if fn is None:
            raise TemplateError(f"unknown procedure {op} in replace expression")
        return fn(self, args)

    def value(self, x: Any) -> Any:
        if isinstance(x, Symbol):
            if x.name not in self.values:
                raise TemplateError(f"unknown feature value {x.name}")
            return self.values[x.name]
        return x


def _host(v: Any) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, str)):
        return str(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_host(x) for x in v)
    return write_datum(v)


def _strings(args: list[Any], n: int, what: str) -> list[str]:
    if len(args) != n or not all(isinstance(a, str) for a in args):
        raise TemplateError(f"{what} expects {n} string argument(s)")
    return args


def _encode(env: ReplaceEnv, args: list[Any]) -> str:
    if len(args) != 1 or not is_int(args[0]):
        raise TemplateError("encode expects a base")
    if args[0] != env.rb:
        raise TemplateError(f"encode {args[0]}: the program was built with rb={env.rb}")
    if env.rb > 92:
        raise TemplateError("encode renders text only for bases up to 92; use encode-as-bytes")
    return "".join(code_to_char(c, env.rb) for c in env.codes)


def _encode_as_bytes(env: ReplaceEnv, args: list[Any]) -> str:
    if not args or not is_int(args[0]):
        raise TemplateError("encode-as-bytes expects a base")
    need = 256 if env.stored is not None else env.rb
    if args[0] < need:
        raise TemplateError(f"encode-as-bytes {args[0]}: values go up to {need - 1}")
    pre, sep, suf = _strings(args[1:], 3, "encode-as-bytes")
    data = env.stored if env.stored is not None else env.codes
    return pre + sep.join(str(b) for b in data) + suf


def _list_to_host(env: ReplaceEnv, args: list[Any]) -> str:
    if len(args) != 4:
        raise TemplateError("list->host expects a list, a prefix, a separator and a suffix")
    lst = env.value(args[0])
    if isinstance(lst, Pair) or lst is NIL:
        lst = to_pylist(lst)
    if not isinstance(lst, (list, tuple)):
        raise TemplateError("list->host needs a list value")
    pre, sep, suf = _strings(args[1:], 3, "list->host")
    return pre + sep.join(_host(x) for x in lst) + suf


_PROCS: dict[str, Callable[[ReplaceEnv, list[Any]], str]] = {
    "encode": _encode,
    "encode-as-bytes": _encode_as_bytes,
    "list->host": _list_to_host,
}


# -- specialization -----------------------------------------------------------

def _indent(line: str) -> str:
    return line[: len(line) - len(line.lstrip())]


def specialize(template: Template, features: FeatureSet, primitives: list[str],
               env: ReplaceEnv) -> str:
    """Render the template for one build.

    ``primitives`` lists the live primitives by runtime number; ``features``
    must already be resolved.
    """
    lines = template.lines
    enabled = features.enabled
    index = {name: i for i, name in enumerate(primitives)}
    out: list[str] = []

    def feature_on(node: Annotation) -> bool:
        if not node.args:
            raise TemplateError(f"line {node.start + 1}: feature needs a name")
        try:
            return eval_feature_expr(node.args[0], enabled)
        except FeatureError as e:
            raise TemplateError(f"line {node.start + 1}: {e}") from None

    def render(items: list[Annotation | int], sink: list[str]) -> None:
        for item in items:
            if isinstance(item, int):
                sink.append(lines[item])
            else:
                node(item, sink)

    def body_of(n: Annotation) -> list[str]:
        if n.inline:
            return [strip_inline(lines[n.start])]
        buf: list[str] = []
        render(n.children, buf)
        return buf

    def node(n: Annotation, sink: list[str]) -> None:
        if n.name == "feature":
            if feature_on(n):
                sink.extend(body_of(n))
        elif n.name == "location":
            name = n.args[0].name if n.args and isinstance(n.args[0], Symbol) else None
            if name is None:
                raise TemplateError(f"line {n.start + 1}: location needs a name")
            pad = _indent(lines[n.start])
            for feat in features.defined.values():
                if feat.name in enabled:
                    sink.extend(pad + code for loc, code in feat.locations if loc == name)
        elif n.name == "replace":
            if len(n.args) != 2 or not isinstance(n.args[0], str):
                raise TemplateError(f"line {n.start + 1}: replace needs a string and an expression")
            needle = n.args[0]
            text = body_of(n)
            if not any(needle in t for t in text):
                raise TemplateError(f"line {n.start + 1}: replace text {needle!r} not found")
            value = env.evaluate(n.args[1])
            sink.extend(t.replace(needle, value) for t in text)
        elif n.name == "primitives":
            gen = _gen_template(n)
            made: dict[str, str] = {}
            for child in n.children:
                if isinstance(child, Annotation) and child.name == "primitive":
                    name, _ = _prim_spec(child)
                    if name in index:
                        made[name] = _gen(gen, index[name], body_of(child), _indent(lines[child.start]))
            for name, prim in features.primitives.items():
                if name in index and name not in made and prim.body is not None:
                    made[name] = _gen(gen, index[name], [prim.body], "")
            for name in primitives:
                if name in made:
                    sink.append(made[name])
        elif n.name == "primitive":
            name, _ = _prim_spec(n)
            if name in index:
                sink.extend(body_of(n))

    render(template.root, out)
    return "\n".join(out)


def _gen_template(n: Annotation) -> list[Any]:
    for a in n.args:
        if isinstance(a, Pair) and a.car == Symbol("gen"):
            return to_pylist(a.cdr)
    raise TemplateError(f"line {n.start + 1}: primitives needs a (gen ...) template")


def _gen(parts: list[Any], index: int, body: list[str], pad: str) -> str:
    out = []
    for p in parts:
        if isinstance(p, str):
            out.append(p)
        elif p == Symbol("index"):
            out.append(str(index))
        elif p == Symbol("body"):
            out.append("\n" + "\n".join(body) if body else "")
        else:
            raise TemplateError(f"gen template references unknown variable {write_datum(p)}")
    return pad + "".join(out)



# -- glue to a finished build ---------------------------------------------------

def host_features(build) -> set[str]:
    """Features switched on by the build settings rather than by the program."""
    opts = build.options
    out = {f"encoding/{opts.encoding}"}
    if opts.lzss:
        out.add("compression/lzss/2b")
    if build.compiled.arity_check:
        out.add("arity-check")
    if build.compiled.prim_no_arity:
        out.add("prim-no-arity")
    return out


def host_values(build) -> dict[str, Any]:
    table = build.encoded.table if build.encoded.optimal else original_table()
    c = build.container
    values: dict[str, Any] = dict(build.compiled.features.values)
    values.update({
        "rb": c.rb,
        "encoding/optimal/start": list(table.starts),
        "encoding/optimal/size": list(table.sizes),
        "compression/lzss/2b/ribn-size": len(build.encoded.ribn),
        "compression/lzss/2b/sb": c.sb or 0,
    })
    return values


def render(template: Template, build) -> str:
    """Specialize ``template`` for ``build`` (whose primitives it declared)."""
    fs = build.compiled.features.copy()
    fs.enabled |= host_features(build)
    stored = build.container.packed if build.container.lzss else None
    env = ReplaceEnv(host_values(build), list(build.encoded.ribn), build.container.rb, stored)
    return specialize(template, fs, build.compiled.primitives, env)
