# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; behaviour matches ``_pykernels`` exactly."""

from libc.stdlib cimport malloc, realloc, free

DEF HALT = 0
DEF EXIT = 1
DEF GROW = 2
DEF ERROR = 3
DEF RESERVE = 512
DEF FALSE = 1
DEF TRUE = 3
DEF NIL = 5

BACKEND = "cython"

cdef int PRIM_ARITY[30]
PRIM_ARITY[:] = [3, 1, 2, 2, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2,
                 0, 1, 1, 0, 0, 1, 1, 1, 2, 1, 1, 2]


def gc_mark_sweep(long long[:] f0, long long[:] f1, long long[:] f2,
                  unsigned char[:] state, Py_ssize_t size, roots):
    cdef Py_ssize_t cap = 1024, top = 0, i
    cdef long long v, free_head = -1
    cdef Py_ssize_t live = 0, reclaimed = 0
    cdef long long *todo = <long long *> malloc(cap * sizeof(long long))
    if todo == NULL:
        raise MemoryError()
    try:
        for r in roots:
            v = r
            if v & 1:
                if top == cap:
                    cap *= 2
                    todo = <long long *> realloc(todo, cap * sizeof(long long))
                    if todo == NULL:
                        raise MemoryError()
                todo[top] = v >> 1
                top += 1
        while top > 0:
            top -= 1
            i = todo[top]
            if state[i] != 1:
                continue
            state[i] = 2
            if top + 3 > cap:
                cap *= 2
                todo = <long long *> realloc(todo, cap * sizeof(long long))
                if todo == NULL:
                    raise MemoryError()
            v = f0[i]
            if v & 1:
                todo[top] = v >> 1
                top += 1
            v = f1[i]
            if v & 1:
                todo[top] = v >> 1
                top += 1
            v = f2[i]
            if v & 1:
                todo[top] = v >> 1
                top += 1
    finally:
        free(todo)
    i = size - 1
    while i >= 0:
        if state[i] == 2:
            state[i] = 1
            live += 1
        else:
            if state[i] == 1:
                reclaimed += 1
                state[i] = 0
            f0[i] = free_head
            free_head = i
        i -= 1
    return live, reclaimed, free_head, size - live


cdef inline long long wadd(long long a, long long b):
    return <long long> (<unsigned long long> a + <unsigned long long> b)


cdef inline long long wsub(long long a, long long b):
    return <long long> (<unsigned long long> a - <unsigned long long> b)


cdef inline long long wmul(long long a, long long b):
    return <long long> (<unsigned long long> a * <unsigned long long> b)


def execute(m):
    store = m.store
    cdef long long[:] F0 = store.f0
    cdef long long[:] F1 = store.f1
    cdef long long[:] F2 = store.f2
    cdef unsigned char[:] ST = store.state
    cdef long long pc = m.pc, stack = m.stack, halt = m.halt
    cdef bint ac = m.arity_check, pna = m.prim_no_arity
    cdef long long fh = store.free_head
    cdef Py_ssize_t fc = store.free_count
    cdef long long steps = 0
    cdef long long i, op, o, s, cell, proc, code, nxt, ch, af, nparams, nargs
    cdef long long frame, new, lst, c, d, x, y, z, t, v, r, a, q, k
    cdef int b
    cdef int pmap[64]
    cdef int npm = len(m.prim_map)
    if npm > 64:
        raise ValueError("too many primitives")
    for k in range(npm):
        pmap[k] = m.prim_map[k]
    io = m.io
    status = ERROR
    try:
        while True:
            if fc < RESERVE:
                m.pc, m.stack = pc, stack
                store.free_head, store.free_count = fh, fc
                F0 = F1 = F2 = None
                ST = None
                store.collect((pc, stack))
                F0, F1, F2, ST = store.f0, store.f1, store.f2, store.state
                fh, fc = store.free_head, store.free_count
                if store.size < store.capacity and fc < store.size // 4:
                    status = GROW
                    break
                if fc < RESERVE:
                    m.error = ("heap",)
                    break
            steps += 1
            i = pc >> 1
            op = F0[i]
            o = F1[i]
            if op == 0:
                if o & 1:
                    cell = o >> 1
                else:
                    s = stack
                    k = o >> 1
                    while k > 0:
                        s = F1[s >> 1]
                        k -= 1
                    cell = s >> 1
                proc = F0[cell]
                if not (proc & 1) or F2[proc >> 1] != 2:
                    m.error = ("not-procedure", o, proc)
                    break
                code = F0[proc >> 1]
                nxt = F2[i]
                if code & 1:
                    ch = code >> 1
                    af = F0[ch] >> 1
                    nparams = af >> 1
                    if ac:
                        nargs = F0[stack >> 1] >> 1
                        stack = F1[stack >> 1]
                        if (nargs < nparams) if (af & 1) else (nargs != nparams):
                            m.error = ("arity", o, nparams, af & 1, nargs)
                            break
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
                        k = nargs - nparams
                        while k > 0:
                            c = fh
                            fh = F0[fh]
                            F0[c] = F0[stack >> 1]
                            F1[c] = lst
                            F2[c] = 0
                            ST[c] = 1
                            fc -= 1
                            lst = c << 1 | 1
                            stack = F1[stack >> 1]
                            k -= 1
                        c = fh
                        fh = F0[fh]
                        F0[c] = lst
                        F1[c] = new
                        F2[c] = 0
                        ST[c] = 1
                        fc -= 1
                        new = c << 1 | 1
                    k = nparams
                    while k > 0:
                        c = fh
                        fh = F0[fh]
                        F0[c] = F0[stack >> 1]
                        F1[c] = new
                        F2[c] = 0
                        ST[c] = 1
                        fc -= 1
                        new = c << 1 | 1
                        stack = F1[stack >> 1]
                        k -= 1
                    if nxt & 1:
                        F0[frame] = stack
                        F2[frame] = nxt
                    else:
                        s = stack
                        while not (F2[s >> 1] & 1):
                            s = F1[s >> 1]
                            if not (s & 1):
                                break
                        if not (s & 1):
                            m.error = ("stack",)
                            break
                        F0[frame] = F0[s >> 1]
                        F2[frame] = F2[s >> 1]
                    stack = new
                    pc = F2[ch]
                    continue
                k = code >> 1
                if k < 0 or k >= npm:
                    m.error = ("bad-primitive", k)
                    break
                b = pmap[k]
                if ac and not pna:
                    nargs = F0[stack >> 1] >> 1
                    stack = F1[stack >> 1]
                    if nargs != PRIM_ARITY[b]:
                        m.error = ("arity", o, PRIM_ARITY[b], 0, nargs)
                        break
                t = stack >> 1
                if b == 0:
                    z = F0[t]
                    stack = F1[t]
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
                elif b == 1:
                    pass
                elif b == 2:
                    stack = F1[t]
                elif b == 3:
                    F1[t] = F1[F1[t] >> 1]
                elif b == 4:
                    x = F0[t]
                    stack = F1[t]
                    if not (x & 1):
                        m.error = ("type", b, x)
                        break
                    c = fh
                    fh = F0[fh]
                    F0[c] = F0[x >> 1]
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
                elif b == 5:
                    F0[t] = TRUE if (F0[t] & 1) else FALSE
                elif b <= 8:
                    x = F0[t]
                    if not (x & 1):
                        m.error = ("type", b, x)
                        break
                    if b == 6:
                        F0[t] = F0[x >> 1]
                    elif b == 7:
                        F0[t] = F1[x >> 1]
                    else:
                        F0[t] = F2[x >> 1]
                elif b <= 11:
                    y = F0[t]
                    stack = F1[t]
                    x = F0[stack >> 1]
                    if not (x & 1):
                        m.error = ("type", b, x)
                        break
                    if b == 9:
                        F0[x >> 1] = y
                    elif b == 10:
                        F1[x >> 1] = y
                    else:
                        F2[x >> 1] = y
                    F0[stack >> 1] = y
                elif b == 12:
                    y = F0[t]
                    stack = F1[t]
                    F0[stack >> 1] = TRUE if F0[stack >> 1] == y else FALSE
                elif b <= 17:
                    y = F0[t]
                    stack = F1[t]
                    x = F0[stack >> 1]
                    if (x | y) & 1:
                        m.error = ("type", b, y if (y & 1) else x)
                        break
                    if b == 13:
                        r = TRUE if x < y else FALSE
                    elif b == 14:
                        r = wadd(x, y)
                    elif b == 15:
                        r = wsub(x, y)
                    elif b == 16:
                        r = wmul(x >> 1, y)
                    else:
                        if y == 0:
                            m.error = ("div0", b)
                            break
                        q = (x >> 1) / (y >> 1)
                        r = wmul(q, 2)
                    F0[stack >> 1] = r
                elif b == 18:
                    m.pc, m.stack = pc, stack
                    store.free_head, store.free_count = fh, fc
                    v = io(18, 0, 0)
                    c = fh
                    fh = F0[fh]
                    F0[c] = v << 1
                    F1[c] = stack
                    F2[c] = 0
                    ST[c] = 1
                    fc -= 1
                    stack = c << 1 | 1
                elif b == 19:
                    x = F0[t]
                    if x & 1:
                        m.error = ("type", b, x)
                        break
                    io(19, x >> 1, 0)
                elif b == 20:
                    x = F0[t]
                    stack = F1[t]
                    m.exit_status = (x >> 1) if not (x & 1) else 1
                    status = EXIT
                    break
                elif b == 21 or b == 22:
                    c = fh
                    fh = F0[fh]
                    F0[c] = (b - 21) << 1
                    F1[c] = stack
                    F2[c] = 0
                    ST[c] = 1
                    fc -= 1
                    stack = c << 1 | 1
                elif b == 23 or b == 24:
                    m.pc, m.stack = pc, stack
                    store.free_head, store.free_count = fh, fc
                    r = io(b, F0[t], 0)
                    F0[t] = FALSE if r < 0 else r << 1
                elif b == 25 or b == 27 or b == 28:
                    x = F0[t]
                    if x & 1:
                        m.error = ("type", b, x)
                        break
                    r = io(b, x >> 1, 0)
                    F0[t] = (r << 1) if b == 25 else TRUE
                elif b == 26:
                    y = F0[t]
                    stack = F1[t]
                    x = F0[stack >> 1]
                    if (x | y) & 1:
                        m.error = ("type", b, y if (y & 1) else x)
                        break
                    io(26, x >> 1, y >> 1)
                else:
                    y = F0[t]
                    stack = F1[t]
                    m.error = ("user", F0[stack >> 1], y)
                    break
                if nxt & 1:
                    pc = nxt
                else:
                    s = stack
                    while not (F2[s >> 1] & 1):
                        s = F1[s >> 1]
                        if not (s & 1):
                            break
                    if not (s & 1):
                        m.error = ("stack",)
                        break
                    F1[stack >> 1] = F0[s >> 1]
                    pc = F2[s >> 1]
                    if pc == halt:
                        status = HALT
                        break
            elif op == 2:
                v = F0[stack >> 1]
                stack = F1[stack >> 1]
                if o & 1:
                    F0[o >> 1] = v
                else:
                    s = stack
                    k = o >> 1
                    while k > 0:
                        s = F1[s >> 1]
                        k -= 1
                    F0[s >> 1] = v
                pc = F2[i]
            elif op == 4:
                if o & 1:
                    v = F0[o >> 1]
                else:
                    s = stack
                    k = o >> 1
                    while k > 0:
                        s = F1[s >> 1]
                        k -= 1
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
            elif op == 6:
                c = fh
                fh = F0[fh]
                F0[c] = o
                F1[c] = stack
                F2[c] = 0
                ST[c] = 1
                fc -= 1
                stack = c << 1 | 1
                pc = F2[i]
            elif op == 8:
                v = F0[stack >> 1]
                stack = F1[stack >> 1]
                pc = o if v != FALSE else F2[i]
            else:
                m.error = ("bad-instruction", op)
                break
    finally:
        m.pc, m.stack = pc, stack
        store.free_head, store.free_count = fh, fc
        m.steps += steps
    return status


def lzss_compress(const unsigned char[:] data, int rb, int sb):
    cdef Py_ssize_t n = data.shape[0], i = 0, j, k, cap, best_len, best_off, off
    cdef Py_ssize_t limit = (256 - rb) * 256
    cdef Py_ssize_t max_off = (limit - 1) // sb
    cdef Py_ssize_t max_size = sb + 2
    cdef Py_ssize_t bp
    out = bytearray()
    while i < n:
        best_len = 0
        best_off = 0
        off = 1
        while off <= max_off and off <= i:
            j = i - off
            cap = max_size
            if n - i < cap:
                cap = n - i
            if limit - 1 - off * sb + 3 < cap:
                cap = limit - 1 - off * sb + 3
            if cap > best_len and cap >= 3:
                k = 0
                while k < cap and data[j + k] == data[i + k]:
                    k += 1
                if k >= 3 and k > best_len:
                    best_len = k
                    best_off = off
                    if k == max_size:
                        break
            off += 1
        if best_len >= 3:
            bp = best_off * sb + best_len - 3
            out.append(rb + (bp >> 8))
            out.append(bp & 255)
            i += best_len
        else:
            out.append(data[i])
            i += 1
    return bytes(out)


def lzss_decompress(const unsigned char[:] data, int rb, int sb, Py_ssize_t expected):
    cdef Py_ssize_t i = 0, n = data.shape[0], bp, size, off, start, k, pos = 0
    cdef unsigned char b
    out = bytearray(expected)
    cdef unsigned char[:] o = out
    while i < n:
        b = data[i]
        if b < rb:
            if pos >= expected:
                return 3, bytes(out[:pos])
            o[pos] = b
            pos += 1
            i += 1
            continue
        if i + 1 >= n:
            return 2, bytes(out[:pos])
        bp = (b - rb) * 256 + data[i + 1]
        i += 2
        size = bp % sb + 3
        off = bp // sb
        start = pos - off
        if off <= 0 or start < 0:
            return 1, bytes(out[:pos])
        if pos + size > expected:
            return 3, bytes(out[:pos])
        for k in range(size):
            o[pos] = o[start + k]
            pos += 1
    if pos != expected:
        return 3, bytes(out[:pos])
    return 0, bytes(out)
