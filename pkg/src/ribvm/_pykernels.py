"""Pure-Python hot kernels: collector, VM dispatch loop, LZSS matcher.

These mirror ``_ckernels.pyx`` exactly; the compiled module is preferred
when it is importable.
"""

from __future__ import annotations

HALT, EXIT, GROW, ERROR = 0, 1, 2, 3
RESERVE = 512

FALSE, TRUE, NIL = 1, 3, 5
_TWO64 = 1 << 64
_TWO63 = 1 << 63

# baseline primitive arities, indexed by baseline primitive number
PRIM_ARITY = (3, 1, 2, 2, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2,
              0, 1, 1, 0, 0, 1, 1, 1, 2, 1, 1, 2)

BACKEND = "python"


def gc_mark_sweep(f0, f1, f2, state, size, roots):
    """Mark from ``roots`` then rebuild the free list.

    Returns ``(live, reclaimed, free_head, free_count)``.
    """
    todo = [r >> 1 for r in roots if r & 1]
    while todo:
        i = todo.pop()
        if state[i] != 1:
            continue
        state[i] = 2
        v = f0[i]
        if v & 1:
            todo.append(v >> 1)
        v = f1[i]
        if v & 1:
            todo.append(v >> 1)
        v = f2[i]
        if v & 1:
            todo.append(v >> 1)
    free_head = -1
    live = reclaimed = 0
    for i in range(size - 1, -1, -1):
        s = state[i]
        if s == 2:
            state[i] = 1
            live += 1
        else:
            if s == 1:
                reclaimed += 1
                state[i] = 0
            f0[i] = free_head
            free_head = i
    return live, reclaimed, free_head, size - live


def _wrap(r):
    if -_TWO63 <= r < _TWO63:
        return r
    return (r + _TWO63) % _TWO64 - _TWO63


def execute(m):
    """Run the machine until halt, exit, a heap-growth request or an error.

    Machine state lives in ``m`` (``pc``, ``stack``) and the store's free
    list; both are written back before returning.
    """
    store = m.store
    F0, F1, F2, ST = store.f0, store.f1, store.f2, store.state
    pc, stack = m.pc, m.stack
    ac, pna = m.arity_check, m.prim_no_arity
    pmap = m.prim_map
    io = m.io
    fh, fc = store.free_head, store.free_count
    steps = 0

    def sync():
        nonlocal steps
        m.pc, m.stack = pc, stack
        store.free_head, store.free_count = fh, fc
        m.steps += steps
        steps = 0

    while True:
        if fc < RESERVE:
            sync()
            store.collect((pc, stack))
            fh, fc = store.free_head, store.free_count
            if store.size < store.capacity and fc < store.size // 4:
                return GROW
            if fc < RESERVE:
                m.error = ("heap",)
                return ERROR
        steps += 1
        i = pc >> 1
        op = F0[i]
        o = F1[i]
        if op == 0:  # jump / call
            if o & 1:
                cell = o >> 1
            else:
                s = stack
                for _ in range(o >> 1):
                    s = F1[s >> 1]
                cell = s >> 1
            proc = F0[cell]
            if not proc & 1 or F2[proc >> 1] != 2:
                sync()
                m.error = ("not-procedure", o, proc)
                return ERROR
            code = F0[proc >> 1]
            nxt = F2[i]
            if code & 1:
                ch = code >> 1
                af = F0[ch] >> 1
                nparams = af >> 1
                if ac:
                    nargs = F0[stack >> 1] >> 1
                    stack = F1[stack >> 1]
                    if nargs < nparams if af & 1 else nargs != nparams:
                        sync()
                        m.error = ("arity", o, nparams, af & 1, nargs)
                        return ERROR
                else:
                    nargs = nparams
                frame = fh
                fh = F0[fh]
                F0[frame] = 0
                F1[frame] = proc
                F2[frame] = 0
                ST[frame] = 1
                fc -= 1
                new = frame << 1 | 1
                if af & 1:
                    lst = NIL
                    for _ in range(nargs - nparams):
                        c = fh
                        fh = F0[fh]
                        F0[c] = F0[stack >> 1]
                        F1[c] = lst
                        F2[c] = 0
                        ST[c] = 1
                        fc -= 1
                        lst = c << 1 | 1
                        stack = F1[stack >> 1]
                    c = fh
                    fh = F0[fh]
                    F0[c] = lst
                    F1[c] = new
                    F2[c] = 0
                    ST[c] = 1
                    fc -= 1
                    new = c << 1 | 1
                for _ in range(nparams):
                    c = fh
                    fh = F0[fh]
                    F0[c] = F0[stack >> 1]
                    F1[c] = new
                    F2[c] = 0
                    ST[c] = 1
                    fc -= 1
                    new = c << 1 | 1
                    stack = F1[stack >> 1]
                if nxt & 1:
                    F0[frame] = stack
                    F2[frame] = nxt
                else:
                    s = stack
                    while not F2[s >> 1] & 1:
                        s = F1[s >> 1]
                        if not s & 1:
                            sync()
                            m.error = ("stack",)
                            return ERROR
                    F0[frame] = F0[s >> 1]
                    F2[frame] = F2[s >> 1]
                stack = new
                pc = F2[ch]
                continue
            # primitive
            b = pmap[code >> 1]
            if ac and not pna:
                nargs = F0[stack >> 1] >> 1
                stack = F1[stack >> 1]
                if nargs != PRIM_ARITY[b]:
                    sync()
                    m.error = ("arity", o, PRIM_ARITY[b], 0, nargs)
                    return ERROR
            top = stack >> 1
            if b == 0:  # ##rib
                z = F0[top]
                stack = F1[top]
                y = F0[stack >> 1]
                stack = F1[stack >> 1]
                x = F0[stack >> 1]
                c = fh
                fh = F0[fh]
                F0[c] = x
                F1[c] = y
                F2[c] = z
                ST[c] = 1
                fc -= 1
                F0[stack >> 1] = c << 1 | 1
            elif b == 1:  # ##id
                pass
            elif b == 2:  # ##arg1
                stack = F1[top]
            elif b == 3:  # ##arg2
                F1[top] = F1[F1[top] >> 1]
            elif b == 4:  # ##close
                t = F0[top]
                stack = F1[top]
                if not t & 1:
                    sync()
                    m.error = ("type", b, t)
                    return ERROR
                c = fh
                fh = F0[fh]
                F0[c] = F0[t >> 1]
                F1[c] = stack
                F2[c] = 2
                ST[c] = 1
                fc -= 1
                d = fh
                fh = F0[fh]
                F0[d] = c << 1 | 1
                F1[d] = stack
                F2[d] = 0
                ST[d] = 1
                fc -= 1
                stack = d << 1 | 1
            elif b == 5:  # ##rib?
                F0[top] = TRUE if F0[top] & 1 else FALSE
            elif b <= 8:  # ##field0..2
                x = F0[top]
                if not x & 1:
                    sync()
                    m.error = ("type", b, x)
                    return ERROR
                F0[top] = (F0, F1, F2)[b - 6][x >> 1]
            elif b <= 11:  # ##field0-set! .. ##field2-set!
                y = F0[top]
                stack = F1[top]
                x = F0[stack >> 1]
                if not x & 1:
                    sync()
                    m.error = ("type", b, x)
                    return ERROR
                (F0, F1, F2)[b - 9][x >> 1] = y
                F0[stack >> 1] = y
            elif b == 12:  # ##eqv?
                y = F0[top]
                stack = F1[top]
                F0[stack >> 1] = TRUE if F0[stack >> 1] == y else FALSE
            elif b <= 17:  # ##< ##+ ##- ##* ##quotient
                y = F0[top]
                stack = F1[top]
                x = F0[stack >> 1]
                if (x | y) & 1:
                    sync()
                    m.error = ("type", b, y if y & 1 else x)
                    return ERROR
                if b == 13:
                    r = TRUE if x < y else FALSE
                elif b == 14:
                    r = _wrap(x + y)
                elif b == 15:
                    r = _wrap(x - y)
                elif b == 16:
                    r = _wrap((x >> 1) * y)
                else:
                    if y == 0:
                        sync()
                        m.error = ("div0", b)
                        return ERROR
                    a, d = x >> 1, y >> 1
                    q = abs(a) // abs(d)
                    if (a < 0) != (d < 0):
                        q = -q
                    r = _wrap(q << 1)
                F0[stack >> 1] = r
            elif b == 18:  # getchar
                c = fh
                fh = F0[fh]
                F0[c] = io(18, 0, 0) << 1
                F1[c] = stack
                F2[c] = 0
                ST[c] = 1
                fc -= 1
                stack = c << 1 | 1
            elif b == 19:  # putchar
                x = F0[top]
                if x & 1:
                    sync()
                    m.error = ("type", b, x)
                    return ERROR
                io(19, x >> 1, 0)
            elif b == 20:  # ##exit
                x = F0[top]
                stack = F1[top]
                m.exit_status = x >> 1 if not x & 1 else 1
                sync()
                return EXIT
            elif b == 21 or b == 22:  # ##stdin-fd ##stdout-fd
                c = fh
                fh = F0[fh]
                F0[c] = (b - 21) << 1
                F1[c] = stack
                F2[c] = 0
                ST[c] = 1
                fc -= 1
                stack = c << 1 | 1
            elif b == 23 or b == 24:  # ##get-fd-input-file ##get-fd-output-file
                sync()
                r = io(b, F0[top], 0)
                F0[top] = FALSE if r < 0 else r << 1
            elif b == 25 or b == 27 or b == 28:  # read-char, close-input, close-output
                x = F0[top]
                if x & 1:
                    sync()
                    m.error = ("type", b, x)
                    return ERROR
                r = io(b, x >> 1, 0)
                F0[top] = r << 1 if b == 25 else TRUE
            elif b == 26:  # ##write-char-fd
                y = F0[top]
                stack = F1[top]
                x = F0[stack >> 1]
                if (x | y) & 1:
                    sync()
                    m.error = ("type", b, y if y & 1 else x)
                    return ERROR
                io(26, x >> 1, y >> 1)
            else:  # ##error
                y = F0[top]
                stack = F1[top]
                sync()
                m.error = ("user", F0[stack >> 1], y)
                return ERROR
            if nxt & 1:
                pc = nxt
            else:
                s = stack
                while not F2[s >> 1] & 1:
                    s = F1[s >> 1]
                    if not s & 1:
                        sync()
                        m.error = ("stack",)
                        return ERROR
                F1[stack >> 1] = F0[s >> 1]
                pc = F2[s >> 1]
                if pc == m.halt:
                    sync()
                    return HALT
        elif op == 2:  # set
            v = F0[stack >> 1]
            stack = F1[stack >> 1]
            if o & 1:
                F0[o >> 1] = v
            else:
                s = stack
                for _ in range(o >> 1):
                    s = F1[s >> 1]
                F0[s >> 1] = v
            pc = F2[i]
        elif op == 4:  # get
            if o & 1:
                v = F0[o >> 1]
            else:
                s = stack
                for _ in range(o >> 1):
                    s = F1[s >> 1]
                v = F0[s >> 1]
            c = fh
            fh = F0[fh]
            F0[c] = v
            F1[c] = stack
            F2[c] = 0
            ST[c] = 1
            fc -= 1
            stack = c << 1 | 1
            pc = F2[i]
        elif op == 6:  # const
            c = fh
            fh = F0[fh]
            F0[c] = o
            F1[c] = stack
            F2[c] = 0
            ST[c] = 1
            fc -= 1
            stack = c << 1 | 1
            pc = F2[i]
        elif op == 8:  # if
            v = F0[stack >> 1]
            stack = F1[stack >> 1]
            pc = o if v != FALSE else F2[i]
        else:
            sync()
            m.error = ("bad-instruction", op)
            return ERROR


# -- LZSS -----------------------------------------------------------------

def lzss_compress(data, rb, sb):
    """Greedy longest-match LZSS; ties broken by the smallest offset."""
    n = len(data)
    limit = (256 - rb) * 256
    max_off = (limit - 1) // sb
    max_size = sb + 2
    out = bytearray()
    chains: dict[bytes, list[int]] = {}
    i = 0
    while i < n:
        best_len = 0
        best_off = 0
        if i + 3 <= n:
            key = bytes(data[i:i + 3])
            cands = chains.get(key)
            if cands:
                for j in reversed(cands):
                    off = i - j
                    if off > max_off:
                        break
                    cap = min(max_size, n - i, limit - 1 - off * sb + 3)
                    if cap < 3 or cap <= best_len:
                        continue
                    k = 3
                    while k < cap and data[j + k] == data[i + k]:
                        k += 1
                    if k > best_len:
                        best_len, best_off = k, off
                        if k == max_size:
                            break
        if best_len >= 3:
            bp = best_off * sb + best_len - 3
            out.append(rb + (bp >> 8))
            out.append(bp & 255)
            step = best_len
        else:
            out.append(data[i])
            step = 1
        for p in range(i, min(i + step, n - 2)):
            chains.setdefault(bytes(data[p:p + 3]), []).append(p)
        i += step
    return bytes(out)


def lzss_decompress(data, rb, sb, expected):
    """Returns ``(status, output)``; status 0 ok, 1 bad offset, 2 truncated, 3 length."""
    out = bytearray()
    i = 0
    n = len(data)
    while i < n:
        b = data[i]
        if b < rb:
            if len(out) >= expected:
                return 3, bytes(out)
            out.append(b)
            i += 1
            continue
        if i + 1 >= n:
            return 2, bytes(out)
        bp = (b - rb) * 256 + data[i + 1]
        i += 2
        size = bp % sb + 3
        off = bp // sb
        start = len(out) - off
        if off <= 0 or start < 0:
            return 1, bytes(out)
        if len(out) + size > expected:
            return 3, bytes(out)
        for k in range(size):
            out.append(out[start + k])
    if len(out) != expected:
        return 3, bytes(out)
    return 0, bytes(out)
