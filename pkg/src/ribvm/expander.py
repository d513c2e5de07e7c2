"""Macro expansion from datums to the core language.

Expanders are Python callables ``fn(form, expander, bound) -> CoreForm``
registered under symbols.  They receive the unexpanded form and decide
themselves what to expand further.  A name that is lexically bound shadows
any expander of the same name.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterable

from .datum import NIL, Char, Pair, Symbol, Vector, is_int, is_proper_list, make_list, to_pylist, write_datum
from .features import FeatureDef, FeatureSet, PrimitiveDef


class ExpandError(SyntaxError):
    pass


# -- core forms -------------------------------------------------------------

class CoreForm:
    __slots__ = ()


@dataclass(eq=False)
class Const(CoreForm):
    value: Any


@dataclass(eq=False)
class Ref(CoreForm):
    name: Symbol


@dataclass(eq=False)
class Set(CoreForm):
    name: Symbol
    expr: CoreForm


@dataclass(eq=False)
class Define(CoreForm):
    """Top-level definition; compiles like :class:`Set` but is prunable."""
    name: Symbol
    expr: CoreForm


@dataclass(eq=False)
class If(CoreForm):
    test: CoreForm
    then: CoreForm
    else_: CoreForm


@dataclass(eq=False)
class Lambda(CoreForm):
    params: tuple[Symbol, ...]
    rest: Symbol | None
    body: CoreForm


@dataclass(eq=False)
class App(CoreForm):
    op: CoreForm
    args: tuple[CoreForm, ...]


@dataclass(eq=False)
class Seq(CoreForm):
    forms: tuple[CoreForm, ...]


@dataclass(eq=False)
class IfFeature(CoreForm):
    feature: Any  # a symbol or an (and|or|not ...) datum
    then: CoreForm
    else_: CoreForm


UNSPECIFIED = 0


def unspecified() -> Const:
    return Const(UNSPECIFIED)


def children(form: CoreForm) -> list[CoreForm]:
    if isinstance(form, (Set, Define)):
        return [form.expr]
    if isinstance(form, (If, IfFeature)):
        return [form.test, form.then, form.else_] if isinstance(form, If) else [form.then, form.else_]
    if isinstance(form, Lambda):
        return [form.body]
    if isinstance(form, App):
        return [form.op, *form.args]
    if isinstance(form, Seq):
        return list(form.forms)
    return []


def show(form: CoreForm) -> str:
    """Compact s-expression rendering of a core form (for tests and errors)."""
    if isinstance(form, Const):
        return "'" + write_datum(form.value)
    if isinstance(form, Ref):
        return form.name.name
    if isinstance(form, Set):
        return f"(set! {form.name.name} {show(form.expr)})"
    if isinstance(form, Define):
        return f"(define {form.name.name} {show(form.expr)})"
    if isinstance(form, If):
        return f"(if {show(form.test)} {show(form.then)} {show(form.else_)})"
    if isinstance(form, Lambda):
        ps = " ".join(p.name for p in form.params)
        if form.rest is not None:
            ps = f"{ps} . {form.rest.name}" if ps else form.rest.name
            return f"(lambda ({ps}) {show(form.body)})" if form.params else f"(lambda {ps} {show(form.body)})"
        return f"(lambda ({ps}) {show(form.body)})"
    if isinstance(form, App):
        return "(" + " ".join(show(x) for x in (form.op, *form.args)) + ")"
    if isinstance(form, Seq):
        return "(begin " + " ".join(show(x) for x in form.forms) + ")"
    if isinstance(form, IfFeature):
        return f"(if-feature {write_datum(form.feature)} {show(form.then)} {show(form.else_)})"
    raise TypeError(form)


# -- symbols used by the expander --------------------------------------------

S = Symbol
_QUOTE, _QUASI, _UNQ, _UNQS = S("quote"), S("quasiquote"), S("unquote"), S("unquote-splicing")
_DEFINE, _LAMBDA, _BEGIN, _ELSE, _ARROW = S("define"), S("lambda"), S("begin"), S("else"), S("=>")
_WILD, _DOTS = S("_"), S("...")
_IF_FEATURE = S("if-feature")

ExpanderFn = Callable[[Pair, "Expander", frozenset], CoreForm]


def _fail(form: Any, why: str) -> ExpandError:
    return ExpandError(f"{why}: {write_datum(form)}")


def _args(form: Pair, lo: int, hi: int | None, name: str) -> list[Any]:
    if not is_proper_list(form):
        raise _fail(form, f"improper {name} form")
    items = to_pylist(form)[1:]
    if len(items) < lo or (hi is not None and len(items) > hi):
        raise _fail(form, f"bad {name} form")
    return items


class Expander:
    """Expansion environment: expanders by name plus the feature set."""

    def __init__(self, features: FeatureSet | None = None):
        self.env: dict[Symbol, ExpanderFn] = dict(BUILTINS)
        self.features = features if features is not None else FeatureSet()
        self._gensym = 0

    def define(self, name: str | Symbol, fn: ExpanderFn) -> None:
        self.env[S(name) if isinstance(name, str) else name] = fn

    def gensym(self, stem: str) -> Symbol:
        self._gensym += 1
        return S(f"##{stem}{self._gensym}")

    # -- entry points -------------------------------------------------------

    def expand_toplevel(self, datum: Any) -> list[CoreForm]:
        """Expand a top-level datum; definitions are allowed here."""
        out: list[CoreForm] = []
        self._toplevel(datum, out)
        return out

    def expand_program(self, datums: Iterable[Any]) -> list[CoreForm]:
        out: list[CoreForm] = []
        for d in datums:
            self._toplevel(d, out)
        return out

    def _head(self, datum: Any, bound: frozenset) -> Symbol | None:
        if isinstance(datum, Pair) and isinstance(datum.car, Symbol) and datum.car not in bound:
            return datum.car
        return None

    def _toplevel(self, datum: Any, out: list[CoreForm]) -> None:
        head = self._head(datum, frozenset())
        if head is _DEFINE and self.env.get(_DEFINE) is _expand_define:
            name, expr = _parse_define(datum)
            out.append(Define(name, self.expand(expr, frozenset(), name)))
        elif head is _BEGIN and self.env.get(_BEGIN) is _expand_begin:
            for d in _args(datum, 0, None, "begin"):
                self._toplevel(d, out)
        elif head is _IF_FEATURE and self.env.get(_IF_FEATURE) is _expand_if_feature:
            items = _args(datum, 2, 3, "if-feature")
            branches = []
            for d in items[1:]:
                sub: list[CoreForm] = []
                self._toplevel(d, sub)
                branches.append(Seq(tuple(sub)) if len(sub) != 1 else sub[0])
            if len(branches) == 1:
                branches.append(unspecified())
            out.append(IfFeature(items[0], branches[0], branches[1]))
        else:
            out.append(self.expand(datum))

    def expand(self, datum: Any, bound: frozenset = frozenset(), name: Symbol | None = None) -> CoreForm:
        if isinstance(datum, Symbol):
            return Ref(datum)
        if isinstance(datum, Pair):
            head = self._head(datum, bound)
            if head is not None:
                fn = self.env.get(head)
                if fn is not None:
                    return fn(datum, self, bound)
            if not is_proper_list(datum):
                raise _fail(datum, "improper application")
            items = to_pylist(datum)
            return App(self.expand(items[0], bound), tuple(self.expand(x, bound) for x in items[1:]))
        if datum is NIL:
            raise _fail(datum, "empty application")
        if isinstance(datum, Vector) or is_int(datum) or isinstance(datum, (str, bool, Char)):
            return Const(datum)
        raise ExpandError(f"cannot expand {datum!r}")

    def expand_body(self, forms: list[Any], bound: frozenset, where: Any) -> CoreForm:
        if not forms:
            raise _fail(where, "empty body")
        out = []
        for f in forms:
            if self._head(f, bound) is _DEFINE:
                raise _fail(f, "internal define is not supported")
            out.append(self.expand(f, bound))
        return out[0] if len(out) == 1 else Seq(tuple(out))


# -- built-in expanders --------------------------------------------------------

def _expand_quote(form, ex, bound):
    (d,) = _args(form, 1, 1, "quote")
    return Const(d)


def _expand_if(form, ex, bound):
    items = _args(form, 2, 3, "if")
    els = ex.expand(items[2], bound) if len(items) == 3 else unspecified()
    return If(ex.expand(items[0], bound), ex.expand(items[1], bound), els)


def _expand_set(form, ex, bound):
    name, expr = _args(form, 2, 2, "set!")
    if not isinstance(name, Symbol):
        raise _fail(form, "set! target must be a symbol")
    return Set(name, ex.expand(expr, bound))


def _parse_params(spec: Any, form: Any) -> tuple[tuple[Symbol, ...], Symbol | None]:
    params = []
    while isinstance(spec, Pair):
        if not isinstance(spec.car, Symbol):
            raise _fail(form, "parameter must be a symbol")
        params.append(spec.car)
        spec = spec.cdr
    rest = None
    if spec is not NIL:
        if not isinstance(spec, Symbol):
            raise _fail(form, "bad rest parameter")
        rest = spec
    names = params + ([rest] if rest else [])
    if len(set(names)) != len(names):
        raise _fail(form, "duplicate parameter")
    return tuple(params), rest


def _expand_lambda(form, ex, bound):
    items = _args(form, 2, None, "lambda")
    params, rest = _parse_params(items[0], form)
    inner = bound | set(params) | ({rest} if rest else set())
    return Lambda(params, rest, ex.expand_body(items[1:], frozenset(inner), form))


def _parse_define(form: Any) -> tuple[Symbol, Any]:
    items = _args(form, 1, None, "define")
    target = items[0]
    if isinstance(target, Pair):
        name = target.car
        if not isinstance(name, Symbol):
            raise _fail(form, "bad define")
        return name, Pair(_LAMBDA, Pair(target.cdr, make_list(items[1:])))
    if not isinstance(target, Symbol) or len(items) > 2:
        raise _fail(form, "bad define")
    return target, (items[1] if len(items) == 2 else False)


def _expand_define(form, ex, bound):
    raise _fail(form, "define is only allowed at top level")


def _expand_begin(form, ex, bound):
    items = _args(form, 0, None, "begin")
    if not items:
        return unspecified()
    return ex.expand_body(items, bound, form)


def _bindings(form: Any, spec: Any) -> list[tuple[Symbol, Any]]:
    if not is_proper_list(spec):
        raise _fail(form, "bad bindings")
    out = []
    for b in to_pylist(spec):
        if not (is_proper_list(b) and isinstance(b, Pair) and isinstance(b.car, Symbol)):
            raise _fail(form, "bad binding")
        parts = to_pylist(b)
        if len(parts) > 2:
            raise _fail(form, "bad binding")
        out.append((parts[0], parts[1] if len(parts) == 2 else False))
    return out


def _expand_let(form, ex, bound):
    items = _args(form, 2, None, "let")
    if isinstance(items[0], Symbol):
        raise _fail(form, "named let is not supported")
    binds = _bindings(form, items[0])
    names = [n for n, _ in binds]
    if len(set(names)) != len(names):
        raise _fail(form, "duplicate binding")
    inner = frozenset(bound | set(names))
    lam = Lambda(tuple(names), None, ex.expand_body(items[1:], inner, form))
    return App(lam, tuple(ex.expand(e, bound) for _, e in binds))


def _expand_let_star(form, ex, bound):
    items = _args(form, 2, None, "let*")
    binds = _bindings(form, items[0])
    if len(binds) <= 1:
        return _expand_let(Pair(S("let"), form.cdr), ex, bound)
    inner = make_list([S("let*"), make_list([make_list([n, e]) for n, e in binds[1:]]), *items[1:]])
    outer = make_list([S("let"), make_list([make_list(list(binds[0]))]), inner])
    return _expand_let(outer, ex, bound)


def _expand_cond(form, ex, bound):
    clauses = _args(form, 0, None, "cond")
    return _cond(clauses, ex, bound, form)


def _cond(clauses, ex, bound, form):
    if not clauses:
        return unspecified()
    clause = clauses[0]
    if not (isinstance(clause, Pair) and is_proper_list(clause)):
        raise _fail(form, "bad cond clause")
    parts = to_pylist(clause)
    if parts[0] is _ELSE and _ELSE not in bound:
        if len(clauses) > 1 or len(parts) < 2:
            raise _fail(form, "bad else clause")
        return ex.expand_body(parts[1:], bound, form)
    if len(parts) >= 2 and parts[1] is _ARROW:
        raise _fail(form, "cond => clauses are not supported")
    if len(parts) == 1:
        rest = make_list([S("cond"), *clauses[1:]])
        return _expand_or(make_list([S("or"), parts[0], rest]), ex, bound)
    return If(ex.expand(parts[0], bound), ex.expand_body(parts[1:], bound, form),
              _cond(clauses[1:], ex, bound, form))


def _expand_and(form, ex, bound):
    items = _args(form, 0, None, "and")
    if not items:
        return Const(True)
    out = ex.expand(items[-1], bound)
    for e in reversed(items[:-1]):
        out = If(ex.expand(e, bound), out, Const(False))
    return out


def _expand_or(form, ex, bound):
    items = _args(form, 0, None, "or")
    if not items:
        return Const(False)
    if len(items) == 1:
        return ex.expand(items[0], bound)
    tmp = ex.gensym("or")
    rest = ex.expand(make_list([S("or"), *items[1:]]), bound | {tmp})
    lam = Lambda((tmp,), None, If(Ref(tmp), Ref(tmp), rest))
    return App(lam, (ex.expand(items[0], bound),))


def _expand_quasiquote(form, ex, bound):
    (tmpl,) = _args(form, 1, 1, "quasiquote")
    return ex.expand(_qq(tmpl, form), bound)


def _qq(t: Any, form: Any) -> Any:
    """Rewrite a (non-nested) quasiquote template into cons/append calls."""
    if isinstance(t, Pair):
        if t.car is _UNQ:
            return to_pylist(t)[1]
        if t.car is _QUASI:
            raise _fail(form, "nested quasiquote is not supported")
        head = t.car
        if isinstance(head, Pair) and head.car is _UNQS:
            return make_list([S("append"), to_pylist(head)[1], _qq(t.cdr, form)])
        return make_list([S("cons"), _qq(head, form), _qq(t.cdr, form)])
    if isinstance(t, (Symbol, Vector)) or t is NIL:
        return make_list([_QUOTE, t])
    return t


# -- define-expander / define-macro ---------------------------------------------

def _match(pat: Any, d: Any, env: dict[Symbol, Any]) -> bool:
    if isinstance(pat, Symbol):
        if pat is not _WILD:
            env[pat] = d
        return True
    if isinstance(pat, Pair):
        if not isinstance(d, Pair):
            return False
        return _match(pat.car, d.car, env) and _match(pat.cdr, d.cdr, env)
    if pat is NIL:
        return d is NIL
    if isinstance(pat, (bool, Char, str)) or is_int(pat):
        return type(pat) is type(d) and pat == d
    return False


def _subst(t: Any, env: dict[Symbol, Any]) -> Any:
    if isinstance(t, Symbol):
        return env.get(t, t)
    if isinstance(t, Pair):
        return Pair(_subst(t.car, env), _subst(t.cdr, env))
    return t


def _qsubst(t: Any, env: dict[Symbol, Any], form: Any) -> Any:
    """Instantiate a quasiquote template directly against pattern bindings."""
    if isinstance(t, Pair):
        if t.car is _UNQ:
            v = to_pylist(t)[1]
            if not isinstance(v, Symbol) or v not in env:
                raise _fail(form, "define-macro templates may only unquote parameters")
            return env[v]
        head = t.car
        if isinstance(head, Pair) and head.car is _UNQS:
            v = to_pylist(head)[1]
            if not isinstance(v, Symbol) or v not in env:
                raise _fail(form, "define-macro templates may only splice parameters")
            return make_list(to_pylist(env[v]), _qsubst(t.cdr, env, form))
        return Pair(_qsubst(head, env, form), _qsubst(t.cdr, env, form))
    return t


def make_template_expander(clauses: list[tuple[Any, Any]], quasi: bool = False) -> ExpanderFn:
    """An expander from ``(pattern template)`` clauses; first match wins.

    When no clause matches the form is treated as a plain application, so a
    macro can speed up common arities and defer to a procedure otherwise.
    """
    def expander(form, ex, bound):
        for pat, tmpl in clauses:
            env: dict[Symbol, Any] = {}
            if _match(pat.cdr, form.cdr, env):
                out = _qsubst(tmpl, env, form) if quasi else _subst(tmpl, env)
                return ex.expand(out, bound)
        if not is_proper_list(form):
            raise _fail(form, "improper application")
        items = to_pylist(form)
        return App(Ref(items[0]), tuple(ex.expand(x, bound) for x in items[1:]))
    return expander


def _expand_define_expander(form, ex, bound):
    items = _args(form, 2, None, "define-expander")
    name = items[0]
    if not isinstance(name, Symbol):
        raise _fail(form, "define-expander needs a name")
    clauses = []
    for c in items[1:]:
        if not (is_proper_list(c) and len(to_pylist(c)) == 2 and isinstance(c.car, Pair)):
            raise _fail(form, "define-expander clauses are (pattern template)")
        pat, tmpl = to_pylist(c)
        clauses.append((pat, tmpl))
    ex.define(name, make_template_expander(clauses))
    return unspecified()


def _expand_define_macro(form, ex, bound):
    items = _args(form, 2, 2, "define-macro")
    spec, body = items
    if not (isinstance(spec, Pair) and isinstance(spec.car, Symbol)):
        raise _fail(form, "define-macro needs (name . params)")
    if not (isinstance(body, Pair) and body.car is _QUASI):
        raise _fail(form, "define-macro body must be a quasiquote template")
    pat = Pair(_WILD, spec.cdr)
    ex.define(spec.car, make_template_expander([(pat, to_pylist(body)[1])], quasi=True))
    return unspecified()


# -- features and primitives -------------------------------------------------

def _uses(clauses: list[Any], form: Any) -> tuple[tuple[str, ...], list[Any]]:
    uses: list[str] = []
    other = []
    for c in clauses:
        if isinstance(c, Pair) and c.car is S("use"):
            for u in to_pylist(c)[1:]:
                if not isinstance(u, Symbol):
                    raise _fail(form, "use clause names must be symbols")
                uses.append(u.name)
        else:
            other.append(c)
    return tuple(uses), other


def _expand_define_primitive(form, ex, bound):
    items = _args(form, 1, None, "define-primitive")
    spec = items[0]
    if not (isinstance(spec, Pair) and isinstance(spec.car, Symbol) and is_proper_list(spec)):
        raise _fail(form, "define-primitive needs (name params ...)")
    uses, other = _uses(items[1:], form)
    bodies = [x for x in other if isinstance(x, str)]
    if len(bodies) != len(other) or len(bodies) > 1:
        raise _fail(form, "define-primitive accepts use clauses and one body string")
    ex.features.add_primitive(PrimitiveDef(spec.car.name, len(to_pylist(spec)) - 1,
                                           bodies[0] if bodies else None, uses))
    return unspecified()


def _expand_define_feature(form, ex, bound):
    items = _args(form, 1, None, "define-feature")
    name = items[0]
    if isinstance(name, Pair):
        name = name.car
    if not isinstance(name, Symbol):
        raise _fail(form, "define-feature needs a name")
    uses, other = _uses(items[1:], form)
    feat = FeatureDef(name.name, uses)
    for loc in other:
        parts = to_pylist(loc) if is_proper_list(loc) else []
        if len(parts) != 2 or not isinstance(parts[0], Symbol) or not isinstance(parts[1], str):
            raise _fail(form, "define-feature bodies are (location \"code\")")
        feat.locations.append((parts[0].name, parts[1]))
    ex.features.add_feature(feat)
    return unspecified()


def _expand_if_feature(form, ex, bound):
    items = _args(form, 2, 3, "if-feature")
    els = ex.expand(items[2], bound) if len(items) == 3 else unspecified()
    return IfFeature(items[0], ex.expand(items[1], bound), els)


BUILTINS: dict[Symbol, ExpanderFn] = {
    _QUOTE: _expand_quote,
    _QUASI: _expand_quasiquote,
    S("if"): _expand_if,
    S("set!"): _expand_set,
    _LAMBDA: _expand_lambda,
    _DEFINE: _expand_define,
    _BEGIN: _expand_begin,
    S("let"): _expand_let,
    S("let*"): _expand_let_star,
    S("cond"): _expand_cond,
    S("and"): _expand_and,
    S("or"): _expand_or,
    S("define-expander"): _expand_define_expander,
    S("define-macro"): _expand_define_macro,
    S("define-primitive"): _expand_define_primitive,
    S("define-feature"): _expand_define_feature,
    S("if-feature"): _expand_if_feature,
}


def expand(datum: Any, env: Expander | None = None, features: FeatureSet | None = None) -> CoreForm:
    """Expand one datum (top-level definitions allowed) to a core form."""
    ex = env if env is not None else Expander(features)
    forms = ex.expand_toplevel(datum)
    return forms[0] if len(forms) == 1 else Seq(tuple(forms))
