"""Core forms to a hash-consed RVM code DAG.

Stack layout during codegen is tracked by a compile-time environment: a
list whose element ``i`` names the value ``i`` cells below the top of the
stack (``None`` for temporaries and frame bookkeeping).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from .codegraph import CONST, GET, IF, JUMP, SET, CodeFactory, CodeNode, Proc, Quoted, all_nodes, rebuild
from .datum import NIL, Char, Pair, Symbol, Vector, datum_key, is_int
from .expander import App, Const, CoreForm, Define, If, IfFeature, Lambda, Ref, Seq, Set, children
from .features import FeatureError, FeatureSet, eval_feature_expr, resolve_features


class CompileError(Exception):
    pass


S = Symbol

BASELINE_PRIMITIVES: tuple[tuple[str, int], ...] = (
    ("##rib", 3), ("##id", 1), ("##arg1", 2), ("##arg2", 2), ("##close", 1),
    ("##rib?", 1), ("##field0", 1), ("##field1", 1), ("##field2", 1),
    ("##field0-set!", 2), ("##field1-set!", 2), ("##field2-set!", 2),
    ("##eqv?", 2), ("##<", 2), ("##+", 2), ("##-", 2), ("##*", 2), ("##quotient", 2),
    ("getchar", 0), ("putchar", 1), ("##exit", 1),
    ("##stdin-fd", 0), ("##stdout-fd", 0), ("##get-fd-input-file", 1), ("##get-fd-output-file", 1),
    ("##read-char-fd", 1), ("##write-char-fd", 2), ("##close-input-fd", 1), ("##close-output-fd", 1),
    ("##error", 2),
)
BASELINE_INDEX = {name: i for i, (name, _) in enumerate(BASELINE_PRIMITIVES)}
BASELINE_ARITY = dict(BASELINE_PRIMITIVES)

RIB, ID, ARG2, CLOSE, SUB = S("##rib"), S("##id"), S("##arg2"), S("##close"), S("##-")
PINNED = (S("##rib"), S("##false"), S("##true"), S("##nil"))
PINNED_VALUE = {False: S("##false"), True: S("##true")}
SYMTBL = S("##symtbl")
MAX_ARGS = 200

# tags of data ribs built by constant preludes
_PAIR, _STRING, _VECTOR, _CHAR = 0, 3, 4, 6


@dataclass
class CompileOptions:
    arity_check: bool | None = None   # None: enabled when rest parameters are live
    prim_no_arity: bool = False
    enable: frozenset[str] = frozenset()
    disable: frozenset[str] = frozenset()
    prune: bool = True
    keep_names: bool = False
    primitive_order: Sequence[str] | None = None
    extra_features: frozenset[str] = frozenset()


@dataclass
class SymbolLayout:
    symbols: list[Symbol]
    named: list[bool]
    counts: list[int] = field(default_factory=list)

    @property
    def anonymous_count(self) -> int:
        """Length of the leading run of anonymous symbols."""
        n = 0
        for flag in self.named:
            if flag:
                break
            n += 1
        return n

    def index(self) -> dict[Symbol, int]:
        return {s: i for i, s in enumerate(self.symbols)}

    def name_of(self, i: int) -> str:
        return self.symbols[i].name if self.named[i] else ""

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass
class CompiledProgram:
    root: CodeNode
    layout: SymbolLayout
    features: FeatureSet
    primitives: list[str]        # live primitives, index = runtime number
    arity_check: bool
    prim_no_arity: bool
    lifted: list[tuple[Symbol, Any]]
    live_globals: set[Symbol]

    @property
    def prim_map(self) -> list[int]:
        return [BASELINE_INDEX[p] for p in self.primitives]


# -- free variables ----------------------------------------------------------

def free_names(form: CoreForm, memo: dict[int, frozenset] | None = None) -> frozenset:
    """Names referenced or assigned in ``form`` that it does not bind itself."""
    if memo is not None and id(form) in memo:
        return memo[id(form)]
    if isinstance(form, Ref):
        out = frozenset((form.name,))
    elif isinstance(form, (Set, Define)):
        out = free_names(form.expr, memo) | {form.name}
    elif isinstance(form, Lambda):
        bound = set(form.params) | ({form.rest} if form.rest else set())
        out = free_names(form.body, memo) - bound
    else:
        acc: set = set()
        for c in children(form):
            acc |= free_names(c, memo)
        out = frozenset(acc)
    if memo is not None:
        memo[id(form)] = out
    return out


def _has_rest(form: CoreForm) -> bool:
    todo = [form]
    while todo:
        f = todo.pop()
        if isinstance(f, Lambda) and f.rest is not None:
            return True
        todo.extend(children(f))
    return False


def _walk(form: CoreForm):
    todo = [form]
    while todo:
        f = todo.pop()
        yield f
        todo.extend(children(f))


# -- liveness ------------------------------------------------------------------

def _pure(form: CoreForm) -> bool:
    """True when evaluating ``form`` has no effect beyond allocation."""
    if isinstance(form, App):
        return isinstance(form.op, Ref) and form.op.name is RIB and all(_pure(a) for a in form.args)
    return isinstance(form, (Lambda, Const, Ref))


def liveness(forms: list[CoreForm], roots: Iterable[Symbol] = ()) -> set[Symbol]:
    """Globals reachable from the non-definition top-level forms (and ``roots``)."""
    prunable: dict[Symbol, list[CoreForm]] = {}
    root_forms: list[CoreForm] = []
    for f in forms:
        if isinstance(f, (Define, Set)) and _pure(f.expr):
            prunable.setdefault(f.name, []).append(f)
        else:
            root_forms.append(f)
    live: set[Symbol] = set()
    work: list[Symbol] = list(roots)
    memo: dict[int, frozenset] = {}
    for f in root_forms:
        work.extend(free_names(f, memo))
    while work:
        name = work.pop()
        if name in live:
            continue
        live.add(name)
        for f in prunable.get(name, ()):
            work.extend(free_names(f.expr, memo))
    return live


def prune(forms: list[CoreForm], live: set[Symbol]) -> list[CoreForm]:
    return [f for f in forms
            if not (isinstance(f, (Define, Set)) and _pure(f.expr)) or f.name in live]


def resolve_if_features(form: CoreForm, enabled: set[str]) -> CoreForm:
    """Replace every feature-conditional by the branch the feature set selects."""
    if isinstance(form, IfFeature):
        branch = form.then if eval_feature_expr(form.feature, enabled) else form.else_
        return resolve_if_features(branch, enabled)
    if isinstance(form, (Const, Ref)):
        return form
    if isinstance(form, Set):
        return Set(form.name, resolve_if_features(form.expr, enabled))
    if isinstance(form, Define):
        return Define(form.name, resolve_if_features(form.expr, enabled))
    if isinstance(form, If):
        return If(*(resolve_if_features(c, enabled) for c in (form.test, form.then, form.else_)))
    if isinstance(form, Lambda):
        return Lambda(form.params, form.rest, resolve_if_features(form.body, enabled))
    if isinstance(form, App):
        return App(resolve_if_features(form.op, enabled),
                   tuple(resolve_if_features(a, enabled) for a in form.args))
    if isinstance(form, Seq):
        return Seq(tuple(resolve_if_features(c, enabled) for c in form.forms))
    raise TypeError(form)


def _flatten(forms: Iterable[CoreForm]) -> list[CoreForm]:
    out: list[CoreForm] = []
    for f in forms:
        if isinstance(f, Seq):
            out.extend(_flatten(f.forms))
        else:
            out.append(f)
    return out


# -- code generation -------------------------------------------------------

class Codegen:
    def __init__(self, factory: CodeFactory, primitives: dict[Symbol, int], arity_check: bool,
                 prim_no_arity: bool, known_arity: dict[Symbol, tuple[int, bool]] | None = None):
        self.f = factory
        self.prims = primitives
        self.ac = arity_check
        self.pna = prim_no_arity
        self.known = known_arity or {}
        self._free: dict[int, frozenset] = {}
        self._eta: dict[Symbol, Lambda] = {}

    # small helpers
    def hc(self, op: int, operand: Any, k: CodeNode | None) -> CodeNode:
        return self.f.hash_cons(op, operand, k)

    def ret(self) -> CodeNode:
        return self.call_prim(ID, 1, None)

    def emit(self, op: int, operand: Any, k: CodeNode | None) -> CodeNode:
        return self.hc(op, operand, k if k is not None else self.ret())

    def call_prim(self, name: Symbol, nargs: int, k: CodeNode | None) -> CodeNode:
        code = self.hc(JUMP, name, k)
        if self.ac and not self.pna:
            code = self.hc(CONST, nargs, code)
        return code

    def drop(self, n: int, k: CodeNode) -> CodeNode:
        for _ in range(n):
            k = self.call_prim(ARG2, 2, k)
        return k

    def is_prim(self, name: Symbol, cte: list) -> bool:
        return name in self.prims and name not in cte

    # expressions
    def comp(self, e: CoreForm, cte: list, k: CodeNode | None) -> CodeNode:
        if isinstance(e, Const):
            return self.comp_const(e.value, k)
        if isinstance(e, Ref):
            return self.comp_ref(e.name, cte, k)
        if isinstance(e, (Set, Define)):
            after = self.emit(CONST, 0, k)
            return self.comp(e.expr, cte, self.hc(SET, self.target(e.name, cte), after))
        if isinstance(e, If):
            then = self.comp(e.then, cte, k)
            els = self.comp(e.else_, cte, k)
            return self.comp(e.test, cte, self.hc(IF, then, els))
        if isinstance(e, Lambda):
            return self.comp_lambda(e, cte, k)
        if isinstance(e, App):
            return self.comp_app(e, cte, k)
        if isinstance(e, Seq):
            return self.comp_seq(list(e.forms), cte, k)
        if isinstance(e, IfFeature):
            raise CompileError("unresolved if-feature reached code generation")
        raise TypeError(e)

    def comp_const(self, v: Any, k: CodeNode | None) -> CodeNode:
        if v is True or v is False:
            return self.emit(GET, PINNED_VALUE[v], k)
        if v is NIL:
            return self.emit(GET, S("##nil"), k)
        if (is_int(v) and v >= 0) or isinstance(v, Symbol):
            return self.emit(CONST, v, k)
        return self.emit(CONST, Quoted(v), k)

    def comp_ref(self, name: Symbol, cte: list, k: CodeNode | None) -> CodeNode:
        if name in cte:
            return self.emit(GET, cte.index(name), k)
        if self.pna and name in self.prims:
            return self.comp_lambda(self.eta(name), cte, k)
        return self.emit(GET, name, k)

    def eta(self, name: Symbol) -> Lambda:
        lam = self._eta.get(name)
        if lam is None:
            params = tuple(S(f"##a{i}") for i in range(self.prims[name]))
            lam = Lambda(params, None, App(Ref(name), tuple(Ref(p) for p in params)))
            self._eta[name] = lam
        return lam

    def target(self, name: Symbol, cte: list) -> Any:
        if name in cte:
            return cte.index(name)
        if name in self.prims:
            raise CompileError(f"cannot assign primitive {name.name}")
        return name

    def comp_seq(self, es: list[CoreForm], cte: list, k: CodeNode | None) -> CodeNode:
        # built back to front so long top-level sequences do not recurse
        temps = 0
        plan: list[tuple[CoreForm, int]] = []
        for e in es[:-1]:
            if isinstance(e, (Const, Ref, Lambda)):
                continue
            plan.append((e, temps))
            if not isinstance(e, (Set, Define)):
                temps += 1
        last_cte = [None] * temps + cte
        tail_k = k if k is None else self.drop(temps, k)
        code = self.comp(es[-1], last_cte, tail_k)
        for e, t in reversed(plan):
            ecte = [None] * t + cte
            if isinstance(e, (Set, Define)):
                code = self.comp(e.expr, ecte, self.hc(SET, self.target(e.name, ecte), code))
            else:
                code = self.comp(e, ecte, code)
        return code

    def comp_lambda(self, lam: Lambda, cte: list, k: CodeNode | None) -> CodeNode:
        free = free_names(lam, self._free)
        closed = any(n in cte for n in free)
        params: list = list(lam.params) + ([lam.rest] if lam.rest is not None else [])
        body_cte = params + [None, None] + (cte if closed else [])
        body = self.comp(lam.body, body_cte, None)
        proc = self.f.proc(2 * len(lam.params) + (1 if lam.rest is not None else 0), body)
        if not closed:
            return self.emit(CONST, proc, k)
        return self.hc(CONST, proc, self.call_prim(CLOSE, 1, k))

    def check_arity(self, name: Symbol, nargs: int) -> None:
        if name in self.prims:
            want = self.prims[name]
            if nargs != want:
                raise CompileError(f"{name.name} expects {want} argument(s), got {nargs}")
        elif name in self.known:
            n, rest = self.known[name]
            if nargs < n or (nargs > n and not rest):
                want = f"at least {n}" if rest else str(n)
                raise CompileError(f"{name.name} expects {want} argument(s), got {nargs}")

    def comp_app(self, e: App, cte: list, k: CodeNode | None) -> CodeNode:
        op, args = e.op, e.args
        nargs = len(args)
        if nargs > MAX_ARGS:
            raise CompileError(f"too many arguments ({nargs}) in one call")
        if isinstance(op, Lambda) and op.rest is None and len(op.params) == nargs:
            return self.comp_let(op, args, cte, k)
        if isinstance(op, Lambda):
            n = len(op.params)
            if nargs < n or (nargs > n and op.rest is None):
                raise CompileError(f"lambda expects {n} argument(s), got {nargs}")
        if isinstance(op, Ref) and op.name not in cte:
            is_prim = op.name in self.prims
            self.check_arity(op.name, nargs)
            code = self.hc(JUMP, op.name, k)
            if self.ac and not (is_prim and self.pna):
                code = self.hc(CONST, nargs, code)
            return self.push_args(args, cte, code)
        extra = 1 if self.ac else 0
        if isinstance(op, Ref):
            code = self.hc(JUMP, cte.index(op.name) + nargs + extra, k)
            if self.ac:
                code = self.hc(CONST, nargs, code)
            return self.push_args(args, cte, code)
        # evaluate the operator into a temporary first
        inner = [None] + cte
        code = self.hc(JUMP, nargs + extra, k if k is None else self.drop(1, k))
        if self.ac:
            code = self.hc(CONST, nargs, code)
        code = self.push_args(args, inner, code)
        return self.comp(op, cte, code)

    def push_args(self, args: Sequence[CoreForm], cte: list, code: CodeNode) -> CodeNode:
        for i in reversed(range(len(args))):
            code = self.comp(args[i], [None] * i + cte, code)
        return code

    def comp_let(self, lam: Lambda, args: Sequence[CoreForm], cte: list, k: CodeNode | None) -> CodeNode:
        n = len(args)
        body_cte = list(reversed(lam.params)) + cte
        code = self.comp(lam.body, body_cte, k if k is None else self.drop(n, k))
        return self.push_args(args, cte, code)

    def comp_toplevel(self, forms: list[CoreForm], k: CodeNode | None = None) -> CodeNode:
        if not forms:
            return self.comp_const(0, k)
        return self.comp_seq(forms, [], k)


# -- constant lifting -------------------------------------------------------

def _composite(d: Any) -> bool:
    return isinstance(d, (Pair, Vector, str, Char))


def _subdatums(d: Any):
    """Immediate composite sub-datums of ``d`` in construction order."""
    if isinstance(d, Pair):
        return [x for x in (d.car, d.cdr) if _composite(x)]
    if isinstance(d, Vector):
        return [x for x in d if _composite(x)]
    return []


def lift_constants(root: CodeNode, factory: CodeFactory, prefix: str = "##const",
                   start: int = 0) -> tuple[CodeNode, list[tuple[Symbol, Any]]]:
    """Replace unencodable ``const`` operands by ``get`` of fresh globals.

    Returns the rewritten DAG and ``(global, datum)`` pairs in an order where
    every datum's shared parts come before it.
    """
    top: dict[tuple, Any] = {}
    for n in all_nodes(root):
        if n.op == CONST and isinstance(n.operand, Quoted):
            top.setdefault(n.operand.key, n.operand.value)
    counts: dict[tuple, int] = {}
    for d in top.values():
        todo = [d]
        while todo:
            x = todo.pop()
            key = datum_key(x)
            counts[key] = counts.get(key, 0) + 1
            if counts[key] == 1:
                todo.extend(_subdatums(x))
            else:
                # already expanded: its parts were counted once already
                pass
    # a sub-datum gets its own global when it occurs more than once
    names: dict[tuple, Symbol] = {}
    order: list[tuple[Symbol, Any]] = []
    counter = [start]

    def visit(d: Any) -> None:
        key = datum_key(d)
        if key in names:
            return
        for x in _subdatums(d):
            if counts.get(datum_key(x), 0) >= 2 or datum_key(x) in top:
                visit(x)
            else:
                _visit_inner(x)
        g = S(f"{prefix}{counter[0]}")
        counter[0] += 1
        names[key] = g
        order.append((g, d))

    def _visit_inner(d: Any) -> None:
        for x in _subdatums(d):
            if counts.get(datum_key(x), 0) >= 2 or datum_key(x) in top:
                visit(x)
            else:
                _visit_inner(x)

    for key in sorted(top, key=repr):
        visit(top[key])

    def fn(op, operand, nxt):
        if op == CONST and isinstance(operand, Quoted):
            return GET, names[operand.key]
        return op, operand

    new_root = rebuild(root, factory, fn)
    return new_root, order


def build_form(d: Any, globals_by_key: dict[tuple, Symbol], top: bool = True) -> CoreForm:
    """A core form that constructs datum ``d`` with ``##rib``."""
    if not top:
        g = globals_by_key.get(datum_key(d))
        if g is not None:
            return Ref(g)
    if is_int(d):
        return Const(d) if d >= 0 else App(Ref(SUB), (Const(0), Const(-d)))
    if isinstance(d, (Symbol, bool)) or d is NIL:
        return Const(d)
    if isinstance(d, Char):
        return App(Ref(RIB), (Const(d.code), Const(0), Const(_CHAR)))
    if isinstance(d, str):
        chars: CoreForm = Const(NIL)
        for c in reversed(d):
            chars = App(Ref(RIB), (Const(ord(c)), chars, Const(_PAIR)))
        return App(Ref(RIB), (chars, Const(len(d)), Const(_STRING)))
    if isinstance(d, Pair):
        return App(Ref(RIB), (build_form(d.car, globals_by_key, False),
                              build_form(d.cdr, globals_by_key, False), Const(_PAIR)))
    if isinstance(d, Vector):
        items: CoreForm = Const(NIL)
        for x in reversed(d):
            items = App(Ref(RIB), (build_form(x, globals_by_key, False), items, Const(_PAIR)))
        return App(Ref(RIB), (items, Const(len(d)), Const(_VECTOR)))
    raise CompileError(f"cannot build constant {d!r}")


def prelude_forms(lifted: list[tuple[Symbol, Any]]) -> list[CoreForm]:
    keys = {datum_key(d): g for g, d in lifted}
    return [Define(g, build_form(d, keys)) for g, d in lifted]


# -- symbol layout ---------------------------------------------------------

def reference_counts(root: CodeNode) -> tuple[dict[Symbol, int], set[Symbol]]:
    counts: dict[Symbol, int] = {}
    data: set[Symbol] = set()
    for n in all_nodes(root):
        if n.op != IF and isinstance(n.operand, Symbol):
            counts[n.operand] = counts.get(n.operand, 0) + 1
            if n.op == CONST:
                data.add(n.operand)
    return counts, data


def assign_symbol_indexes(root: CodeNode, keep_names: bool = False,
                          extra: Iterable[Symbol] = ()) -> SymbolLayout:
    """Pinned symbols first, then by descending reference count, ties by name."""
    counts, data = reference_counts(root)
    for s in extra:
        counts.setdefault(s, 0)
    rest = sorted((s for s in counts if s not in PINNED), key=lambda s: (-counts[s], s.name))
    symbols = list(PINNED) + rest
    named = [keep_names or s in data or s is SYMTBL for s in symbols]
    return SymbolLayout(symbols, named, [counts.get(s, 0) for s in symbols])


# -- whole-program driver ----------------------------------------------------

def _primitive_table(fs: FeatureSet) -> dict[Symbol, int]:
    out = {}
    for name, prim in fs.primitives.items():
        if name not in BASELINE_INDEX:
            raise CompileError(f"unknown primitive {name}")
        if prim.nparams != BASELINE_ARITY[name]:
            raise CompileError(f"primitive {name} declared with {prim.nparams} parameter(s)")
        out[S(name)] = prim.nparams
    out.setdefault(RIB, 3)
    return out


def _known_arities(forms: list[CoreForm]) -> dict[Symbol, tuple[int, bool]]:
    defs: dict[Symbol, list[CoreForm]] = {}
    assigned: set[Symbol] = set()
    for f in forms:
        if isinstance(f, Define):
            defs.setdefault(f.name, []).append(f.expr)
        for sub in _walk(f.expr if isinstance(f, Define) else f):
            if isinstance(sub, (Set, Define)):
                assigned.add(sub.name)
    out = {}
    for name, exprs in defs.items():
        if len(exprs) == 1 and isinstance(exprs[0], Lambda) and name not in assigned:
            out[name] = (len(exprs[0].params), exprs[0].rest is not None)
    return out


def _live_primitives(root: CodeNode, prims: dict[Symbol, int]) -> set[Symbol]:
    out = {RIB}
    for n in all_nodes(root):
        if n.op in (JUMP, GET) and isinstance(n.operand, Symbol) and n.operand in prims:
            out.add(n.operand)
    return out


def _compiler_features(arity_check: bool, prim_no_arity: bool, rest: bool) -> set[str]:
    out = set()
    if arity_check:
        out.add("arity-check")
    if rest:
        out.add("rest-param")
    if prim_no_arity:
        out.add("prim-no-arity")
    return out


def compile_program(forms: list[CoreForm], library: list[CoreForm], features: FeatureSet,
                    options: CompileOptions | None = None) -> CompiledProgram:
    """Compile library plus program into one DAG with preludes prepended."""
    opts = options or CompileOptions()
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))
    top = _flatten(list(library) + list(forms))
    prims = _primitive_table(features)
    for f in top:
        if isinstance(f, (Define, Set)) and f.name in prims:
            raise CompileError(f"cannot redefine primitive {f.name.name}")
        if isinstance(f, Define) and f.name in PINNED:
            raise CompileError(f"cannot redefine {f.name.name}")

    # liveness, then feature resolution, then liveness again on the result
    if opts.prune:
        top = prune(top, liveness(top))
    rest = any(_has_rest(f) for f in top)
    forced_on = opts.arity_check is True or "arity-check" in opts.enable
    forced_off = opts.arity_check is False or "arity-check" in opts.disable
    if forced_on and forced_off:
        raise FeatureError("arity-check both enabled and disabled")
    if rest and forced_off:
        raise FeatureError("cannot disable arity-check: rest parameters are used")
    ac = forced_on or rest
    pna = opts.prim_no_arity
    referenced = {n.name.name for f in top for n in _walk(f) if isinstance(n, Ref) and n.name in prims}
    demanded = referenced | _compiler_features(ac, pna, rest) | set(opts.extra_features)
    fs1 = resolve_features(features, demanded, opts.enable, opts.disable)
    top = _flatten(resolve_if_features(f, fs1.enabled) for f in top)
    if opts.prune:
        top = prune(top, liveness(top))
    rest = any(_has_rest(f) for f in top)

    factory = CodeFactory()
    gen = Codegen(factory, prims, ac, pna, _known_arities(top))
    root = gen.comp_toplevel(top)
    root, lifted = lift_constants(root, factory)
    for f in reversed(prelude_forms(lifted)):
        root = gen.comp(f.expr, [], factory.hash_cons(SET, f.name, root))

    live_prims = _live_primitives(root, prims)
    final = resolve_features(features, {p.name for p in live_prims} | _compiler_features(ac, pna, rest)
                             | set(opts.extra_features), opts.enable, opts.disable)
    order = list(opts.primitive_order) if opts.primitive_order is not None else list(features.primitives)
    unknown = [p for p in live_prims if p.name not in order and p != RIB]
    if unknown:
        raise CompileError("live primitive(s) missing from the primitive order: "
                           + ", ".join(sorted(p.name for p in unknown)))
    names = [RIB.name] + [p for p in order if S(p) in live_prims and p != RIB.name]
    for idx, name in enumerate(names[1:], start=1):
        call = App(Ref(RIB), (Const(idx), Const(0), Const(1)))
        root = gen.comp(call, [], factory.hash_cons(SET, S(name), root))

    _check_bound(root, prims)
    layout = assign_symbol_indexes(root, opts.keep_names)
    final.values.update({"primitives": names})
    live = {f.name for f in top if isinstance(f, (Define, Set))}
    return CompiledProgram(root, layout, final, names, ac, pna, lifted, live)


def _check_bound(root: CodeNode, prims: dict[Symbol, int]) -> None:
    assigned = set(PINNED) | set(prims) | {SYMTBL}
    used: dict[Symbol, None] = {}
    for n in all_nodes(root):
        if isinstance(n.operand, Symbol):
            if n.op == SET:
                assigned.add(n.operand)
            elif n.op in (GET, JUMP):
                used[n.operand] = None
    missing = sorted((s.name for s in used if s not in assigned))
    if missing:
        raise CompileError("unbound global(s): " + ", ".join(missing))
