"""Host-side Scheme data: symbols, characters, pairs, vectors, and a writer.

Integers are plain ``int`` (never ``bool``), booleans are ``True``/``False``,
strings are ``str``, the empty list is :data:`NIL`.
"""

from __future__ import annotations

from typing import Any, Iterable, Iterator


class Symbol:
    __slots__ = ("name",)
    _table: dict[str, "Symbol"] = {}

    def __new__(cls, name: str) -> "Symbol":
        sym = cls._table.get(name)
        if sym is None:
            sym = super().__new__(cls)
            sym.name = name
            cls._table[name] = sym
        return sym

    def __repr__(self) -> str:
        return self.name

    def __reduce__(self):
        return (Symbol, (self.name,))


def sym(name: str) -> Symbol:
    return Symbol(name)


class Char:
    __slots__ = ("code",)

    def __init__(self, code: int):
        self.code = code

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Char) and other.code == self.code

    def __hash__(self) -> int:
        return hash(("char", self.code))

    def __repr__(self) -> str:
        return write_datum(self)


class _Nil:
    __slots__ = ()

    def __repr__(self) -> str:
        return "()"

    def __iter__(self):
        return iter(())

    def __bool__(self) -> bool:
        return False


NIL = _Nil()


class Pair:
    __slots__ = ("car", "cdr")

    def __init__(self, car: Any, cdr: Any):
        self.car = car
        self.cdr = cdr

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Pair):
            return False
        a, b = self, other
        while isinstance(a, Pair) and isinstance(b, Pair):
            if not datum_equal(a.car, b.car):
                return False
            a, b = a.cdr, b.cdr
        return datum_equal(a, b)

    __hash__ = None  # mutable

    def __iter__(self) -> Iterator[Any]:
        p: Any = self
        while isinstance(p, Pair):
            yield p.car
            p = p.cdr

    def __repr__(self) -> str:
        return write_datum(self)


class Vector(list):
    """A Scheme vector; a list subclass so it never compares equal to a list datum."""

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Vector) and len(self) == len(other)
                and all(datum_equal(a, b) for a, b in zip(self, other)))

    __hash__ = None

    def __repr__(self) -> str:
        return write_datum(self)


def is_int(x: Any) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def make_list(items: Iterable[Any], tail: Any = NIL) -> Any:
    out = tail
    for x in reversed(list(items)):
        out = Pair(x, out)
    return out


def to_pylist(lst: Any) -> list:
    """Elements of a proper list; raises ``ValueError`` for improper lists."""
    out = []
    while isinstance(lst, Pair):
        out.append(lst.car)
        lst = lst.cdr
    if lst is not NIL:
        raise ValueError("improper list")
    return out


def is_proper_list(x: Any) -> bool:
    while isinstance(x, Pair):
        x = x.cdr
    return x is NIL


def datum_equal(a: Any, b: Any) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return a is b
    if isinstance(a, Pair) or isinstance(a, Vector) or isinstance(a, Char):
        return a == b
    if isinstance(a, Symbol) or a is NIL:
        return a is b
    return type(a) is type(b) and a == b


_CHAR_NAMES = {32: "space", 10: "newline", 9: "tab"}
_STRING_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\t": "\\t"}


def write_datum(x: Any, display: bool = False) -> str:
    """Render a datum the way ``write`` (or ``display``) would."""
    parts: list[str] = []
    _write(x, display, parts)
    return "".join(parts)


def _write(x: Any, display: bool, out: list[str]) -> None:
    if x is True:
        out.append("#t")
    elif x is False:
        out.append("#f")
    elif is_int(x):
        out.append(str(x))
    elif isinstance(x, Symbol):
        out.append(x.name)
    elif isinstance(x, str):
        if display:
            out.append(x)
        else:
            out.append('"' + "".join(_STRING_ESCAPES.get(c, c) for c in x) + '"')
    elif isinstance(x, Char):
        if display:
            out.append(chr(x.code))
        else:
            out.append("#\\" + _CHAR_NAMES.get(x.code, chr(x.code)))
    elif x is NIL:
        out.append("()")
    elif isinstance(x, Pair):
        out.append("(")
        first = True
        while isinstance(x, Pair):
            if not first:
                out.append(" ")
            _write(x.car, display, out)
            first = False
            x = x.cdr
        if x is not NIL:
            out.append(" . ")
            _write(x, display, out)
        out.append(")")
    elif isinstance(x, Vector):
        out.append("#(")
        for i, e in enumerate(x):
            if i:
                out.append(" ")
            _write(e, display, out)
        out.append(")")
    else:
        out.append(repr(x))


def datum_key(x: Any) -> tuple:
    """Structural, hashable key; equal keys iff ``datum_equal``."""
    if x is True or x is False:
        return ("b", x)
    if is_int(x):
        return ("i", x)
    if isinstance(x, Symbol):
        return ("s", x.name)
    if isinstance(x, str):
        return ("t", x)
    if isinstance(x, Char):
        return ("c", x.code)
    if x is NIL:
        return ("n",)
    if isinstance(x, Pair):
        cars = []
        while isinstance(x, Pair):
            cars.append(datum_key(x.car))
            x = x.cdr
        return ("p", tuple(cars), datum_key(x))
    if isinstance(x, Vector):
        return ("v", tuple(datum_key(e) for e in x))
    raise TypeError(f"not a datum: {x!r}")
