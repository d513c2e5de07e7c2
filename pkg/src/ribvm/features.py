"""Compile-time features: named switches with ``use`` dependencies.

Primitives are features too; a live primitive pulls in whatever its
definition ``use``s.  Resolution is a fixpoint over the dependency graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable

from .datum import Pair, Symbol


class FeatureError(Exception):
    pass


@dataclass
class PrimitiveDef:
    name: str
    nparams: int
    body: str | None = None
    uses: tuple[str, ...] = ()


@dataclass
class FeatureDef:
    name: str
    uses: tuple[str, ...] = ()
    locations: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class FeatureSet:
    """Everything the source declares about features, plus resolution state."""

    primitives: dict[str, PrimitiveDef] = field(default_factory=dict)
    defined: dict[str, FeatureDef] = field(default_factory=dict)
    enabled: set[str] = field(default_factory=set)
    disabled: set[str] = field(default_factory=set)
    values: dict[str, Any] = field(default_factory=dict)

    def add_primitive(self, prim: PrimitiveDef) -> None:
        old = self.primitives.get(prim.name)
        if old is not None and old.nparams != prim.nparams:
            raise FeatureError(f"primitive {prim.name} redefined with a different arity")
        if old is not None:
            # a second declaration (host template, then library) merges with the first
            uses = old.uses + tuple(u for u in prim.uses if u not in old.uses)
            prim = PrimitiveDef(prim.name, prim.nparams, prim.body or old.body, uses)
        self.primitives[prim.name] = prim

    def add_feature(self, feat: FeatureDef) -> None:
        self.defined[feat.name] = feat

    def uses(self, name: str) -> tuple[str, ...]:
        if name in self.primitives:
            return self.primitives[name].uses
        if name in self.defined:
            return self.defined[name].uses
        return ()

    def known(self) -> set[str]:
        out = set(self.primitives) | set(self.defined)
        for name in list(out):
            out.update(self.uses(name))
        return out

    def is_enabled(self, name: str) -> bool:
        return name in self.enabled

    def copy(self) -> "FeatureSet":
        return FeatureSet(dict(self.primitives), dict(self.defined), set(self.enabled),
                          set(self.disabled), dict(self.values))


def resolve_features(fs: FeatureSet, demanded: Iterable[str],
                     enable: Iterable[str] = (), disable: Iterable[str] = ()) -> FeatureSet:
    """Enable ``demanded`` and forced features plus everything they use.

    Raises :class:`FeatureError` when a feature is both forced on and off,
    or when something required is disabled.
    """
    enable, disable = set(enable), set(disable)
    clash = enable & disable
    if clash:
        raise FeatureError(f"feature(s) both enabled and disabled: {', '.join(sorted(clash))}")
    why: dict[str, str] = {}
    todo = []
    for name in sorted(set(demanded) | enable):
        why[name] = "requested" if name in enable else "required by the program"
        todo.append(name)
    while todo:
        name = todo.pop()
        for dep in fs.uses(name):
            if dep not in why:
                why[dep] = f"used by {name}"
                todo.append(dep)
    bad = sorted(n for n in why if n in disable)
    if bad:
        raise FeatureError("; ".join(f"cannot disable {n}: {why[n]}" for n in bad))
    out = fs.copy()
    out.enabled = set(why)
    out.disabled = (fs.known() | disable) - out.enabled
    return out


def eval_feature_expr(expr: Any, enabled: set[str]) -> bool:
    """Evaluate a feature expression: a name, or ``(and ...)``/``(or ...)``/``(not x)``."""
    if isinstance(expr, Symbol):
        return expr.name in enabled
    if isinstance(expr, str):
        return expr in enabled
    if isinstance(expr, Pair) and isinstance(expr.car, Symbol):
        args = list(expr.cdr)
        op = expr.car.name
        if op == "and":
            return all(eval_feature_expr(a, enabled) for a in args)
        if op == "or":
            return any(eval_feature_expr(a, enabled) for a in args)
        if op == "not" and len(args) == 1:
            return not eval_feature_expr(args[0], enabled)
    raise FeatureError(f"bad feature expression: {expr!r}")


def feature_names(expr: Any) -> set[str]:
    if isinstance(expr, Symbol):
        return {expr.name}
    if isinstance(expr, Pair):
        out: set[str] = set()
        for a in list(expr.cdr):
            out |= feature_names(a)
        return out
    return set()
