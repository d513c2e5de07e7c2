"""Hash-consed code DAG: RVM instruction nodes and constant procedures."""

from __future__ import annotations

from typing import Any, Iterator

from .datum import Symbol, datum_key, is_int, write_datum

JUMP, SET, GET, CONST, IF = 0, 1, 2, 3, 4
OP_NAMES = ("jump", "set", "get", "const", "if")


class Quoted:
    """A constant that cannot be a ``const`` operand until it is lifted."""

    __slots__ = ("value", "key")

    def __init__(self, value: Any):
        self.value = value
        self.key = datum_key(value)

    def __repr__(self) -> str:
        return "'" + write_datum(self.value)


class CodeNode:
    """One RVM instruction. ``next is None`` exactly when the node is a jump."""

    __slots__ = ("op", "operand", "next", "__weakref__")

    def __init__(self, op: int, operand: Any, next: "CodeNode | None"):
        self.op = op
        self.operand = operand
        self.next = next

    @property
    def is_call(self) -> bool:
        return self.op == JUMP and self.next is not None

    def __repr__(self) -> str:
        name = OP_NAMES[self.op]
        if self.op == JUMP and self.next is not None:
            name = "call"
        return f"<{name} {operand_repr(self.operand)}>"


class Proc:
    """A constant procedure: arity field ``2*nparams + rest`` and a body chain."""

    __slots__ = ("arity", "body", "__weakref__")

    def __init__(self, arity: int, body: CodeNode):
        self.arity = arity
        self.body = body

    @property
    def nparams(self) -> int:
        return self.arity >> 1

    @property
    def has_rest(self) -> bool:
        return bool(self.arity & 1)

    def __repr__(self) -> str:
        return f"<proc/{self.arity}>"


def operand_repr(x: Any) -> str:
    if isinstance(x, Symbol):
        return x.name
    if isinstance(x, (CodeNode, Proc, Quoted)):
        return repr(x)
    return str(x)


def operand_key(x: Any) -> tuple:
    if is_int(x):
        return ("i", x)
    if isinstance(x, Symbol):
        return ("s", x.name)
    if isinstance(x, Quoted):
        return ("q", x.key)
    if isinstance(x, (CodeNode, Proc)):
        return ("o", id(x))
    raise TypeError(f"bad operand {x!r}")


class CodeFactory:
    """Canonicalizing constructor: equal triples give the identical node."""

    def __init__(self) -> None:
        self._nodes: dict[tuple, CodeNode] = {}
        self._procs: dict[tuple, Proc] = {}

    def hash_cons(self, op: int, operand: Any, next: CodeNode | None) -> CodeNode:
        if op == IF and not isinstance(operand, CodeNode):
            raise TypeError("if operand must be a code node")
        if next is None and op != JUMP:
            raise TypeError("only jump nodes may end a chain")
        key = (op, operand_key(operand), id(next) if next is not None else None)
        node = self._nodes.get(key)
        if node is None:
            node = CodeNode(op, operand, next)
            self._nodes[key] = node
        return node

    def proc(self, arity: int, body: CodeNode) -> Proc:
        key = (arity, id(body))
        p = self._procs.get(key)
        if p is None:
            p = Proc(arity, body)
            self._procs[key] = p
        return p

    def __len__(self) -> int:
        return len(self._nodes)


def successors(node: CodeNode) -> Iterator[CodeNode]:
    if node.next is not None:
        yield node.next
    if node.op == IF:
        yield node.operand
    elif isinstance(node.operand, Proc):
        yield node.operand.body


def all_nodes(root: CodeNode) -> list[CodeNode]:
    """Distinct nodes reachable from ``root`` (iterative, any depth)."""
    seen: dict[int, CodeNode] = {}
    todo = [root]
    while todo:
        n = todo.pop()
        if id(n) in seen:
            continue
        seen[id(n)] = n
        todo.extend(successors(n))
    return list(seen.values())


def count_nodes(root: CodeNode) -> int:
    return len(all_nodes(root))


def tree_size(root: CodeNode) -> int:
    """Number of nodes if every shared tail were duplicated."""
    memo: dict[int, int] = {}
    order = _postorder(root)
    for n in order:
        total = 1 + sum(memo[id(s)] for s in successors(n))
        memo[id(n)] = total
    return memo[id(root)]


def _postorder(root: CodeNode) -> list[CodeNode]:
    out: list[CodeNode] = []
    seen: set[int] = set()
    stack: list[tuple[CodeNode, bool]] = [(root, False)]
    while stack:
        n, done = stack.pop()
        if done:
            out.append(n)
            continue
        if id(n) in seen:
            continue
        seen.add(id(n))
        stack.append((n, True))
        for s in successors(n):
            if id(s) not in seen:
                stack.append((s, False))
    return out


def rebuild(root: CodeNode, factory: CodeFactory, fn) -> CodeNode:
    """Re-hash-cons the DAG bottom-up, mapping each node through ``fn``.

    ``fn(op, operand, next)`` returns the new ``(op, operand)`` for a node
    whose successors were already rebuilt.
    """
    memo: dict[int, CodeNode] = {}
    pmemo: dict[int, Proc] = {}
    for n in _postorder(root):
        nxt = memo[id(n.next)] if n.next is not None else None
        operand = n.operand
        if n.op == IF:
            operand = memo[id(operand)]
        elif isinstance(operand, Proc):
            p = pmemo.get(id(operand))
            if p is None:
                p = factory.proc(operand.arity, memo[id(operand.body)])
                pmemo[id(operand)] = p
            operand = p
        op, operand = fn(n.op, operand, nxt)
        memo[id(n)] = factory.hash_cons(op, operand, nxt)
    return memo[id(root)]


def same_structure(a: CodeNode, b: CodeNode) -> bool:
    """Structural equality of two code graphs, ignoring how tails are shared."""
    seen: set[tuple[int, int]] = set()
    todo = [(a, b)]
    while todo:
        x, y = todo.pop()
        if (id(x), id(y)) in seen:
            continue
        seen.add((id(x), id(y)))
        if x.op != y.op or (x.next is None) != (y.next is None):
            return False
        ox, oy = x.operand, y.operand
        if x.op == IF:
            todo.append((ox, oy))
        elif isinstance(ox, Proc) or isinstance(oy, Proc):
            if not (isinstance(ox, Proc) and isinstance(oy, Proc)) or ox.arity != oy.arity:
                return False
            todo.append((ox.body, oy.body))
        elif operand_key(ox) != operand_key(oy):
            return False
        if x.next is not None:
            todo.append((x.next, y.next))
    return True


def dump(root: CodeNode) -> str:
    """Readable listing of a DAG; shared nodes are labelled and referenced."""
    lines: list[str] = []
    preds: dict[int, int] = {}
    for n in all_nodes(root):
        for s in successors(n):
            preds[id(s)] = preds.get(id(s), 0) + 1
    labels: dict[int, str] = {}

    def walk(n: CodeNode | None, indent: str) -> None:
        while n is not None:
            if id(n) in labels:
                lines.append(f"{indent}-> {labels[id(n)]}")
                return
            if preds.get(id(n), 0) > 1:
                labels[id(n)] = f"L{len(labels)}"
                lines.append(f"{indent}{labels[id(n)]}:")
            lines.append(f"{indent}{n!r}")
            if n.op == IF:
                walk(n.operand, indent + "  ")
            elif isinstance(n.operand, Proc):
                walk(n.operand.body, indent + "  | ")
            n = n.next

    walk(root, "")
    return "\n".join(lines)
