# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled search kernel; mirrors pykernel.py operation for operation.

Same state layout, same iteration order, same tie-breaking: the two lanes
must produce identical trails, picks, and counts (asserted by tests).
Dependency masks are fixed-width bitsets of ceil((n+1)/64) words; they cross
the Python boundary as arbitrary-size ints only on push and conflict
extraction, both of which are off the hot path.
"""

from libc.stdlib cimport calloc, free
from libc.string cimport memset
from libc.stdint cimport int8_t, uint64_t

LANE = "c"

CAUSE_DECISION = 0
CAUSE_UNIT = 1
CAUSE_PURE = 2


cdef inline int _lix(int lit) nogil:
    return 2 * lit if lit > 0 else -2 * lit + 1


cdef class State:
    cdef public int n, m
    cdef int L, W
    cdef int trail_len_, head_, n_sat_
    cdef int *lits
    cdef int *start
    cdef int *occ_start
    cdef int *occ_cl
    cdef int8_t *assign
    cdef uint64_t *deps        # (n+1) * W words
    cdef int *num_free
    cdef int *num_true
    cdef int *trail_var
    cdef int8_t *trail_cause
    cdef int *trail_reason
    cdef int *score
    cdef int *pos
    cdef int8_t *seen

    def __cinit__(self, int n, list py_lits, list py_start):
        cdef int i, c, p, b
        self.n = n
        self.m = len(py_start) - 1
        self.L = len(py_lits)
        self.W = (n >> 6) + 1
        self.lits = <int *>calloc(self.L if self.L else 1, sizeof(int))
        self.start = <int *>calloc(self.m + 1, sizeof(int))
        self.occ_start = <int *>calloc(2 * n + 3, sizeof(int))
        self.occ_cl = <int *>calloc(self.L if self.L else 1, sizeof(int))
        self.assign = <int8_t *>calloc(n + 1, sizeof(int8_t))
        self.deps = <uint64_t *>calloc((n + 1) * self.W, sizeof(uint64_t))
        self.num_free = <int *>calloc(self.m if self.m else 1, sizeof(int))
        self.num_true = <int *>calloc(self.m if self.m else 1, sizeof(int))
        self.trail_var = <int *>calloc(n + 1, sizeof(int))
        self.trail_cause = <int8_t *>calloc(n + 1, sizeof(int8_t))
        self.trail_reason = <int *>calloc(n + 1, sizeof(int))
        self.score = <int *>calloc(n + 1, sizeof(int))
        self.pos = <int *>calloc(n + 1, sizeof(int))
        self.seen = <int8_t *>calloc(2 * n + 2, sizeof(int8_t))
        for i in range(self.L):
            self.lits[i] = py_lits[i]
        for i in range(self.m + 1):
            self.start[i] = py_start[i]
        # occurrence CSR, bucket 2v for literal v, 2v+1 for -v
        cdef int *counts = <int *>calloc(2 * n + 2, sizeof(int))
        for i in range(self.L):
            counts[_lix(self.lits[i])] += 1
        self.occ_start[0] = 0
        for i in range(2 * n + 2):
            self.occ_start[i + 1] = self.occ_start[i] + counts[i]
        cdef int *fill = <int *>calloc(2 * n + 2, sizeof(int))
        for i in range(2 * n + 2):
            fill[i] = self.occ_start[i]
        for c in range(self.m):
            for p in range(self.start[c], self.start[c + 1]):
                b = _lix(self.lits[p])
                self.occ_cl[fill[b]] = c
                fill[b] += 1
        free(counts)
        free(fill)
        for c in range(self.m):
            self.num_free[c] = self.start[c + 1] - self.start[c]
        self.trail_len_ = 0
        self.head_ = 0
        self.n_sat_ = 0

    def __dealloc__(self):
        free(self.lits); free(self.start); free(self.occ_start); free(self.occ_cl)
        free(self.assign); free(self.deps); free(self.num_free); free(self.num_true)
        free(self.trail_var); free(self.trail_cause); free(self.trail_reason)
        free(self.score); free(self.pos); free(self.seen)


def make_state(int n, list lits, list start):
    return State(n, lits, start)


def push(State s, int var, int value, int cause, int reason, object deps):
    cdef int i = s.trail_len_
    cdef int w
    cdef object d = deps
    s.assign[var] = <int8_t>value
    for w in range(s.W):
        s.deps[var * s.W + w] = <uint64_t>(d & 0xFFFFFFFFFFFFFFFF)
        d >>= 64
    s.trail_var[i] = var
    s.trail_cause[i] = <int8_t>cause
    s.trail_reason[i] = reason
    s.trail_len_ = i + 1


def propagate(State s):
    cdef int var, val, tix, fix, o, c, p, lt, v, ulit, uvar, conflict, j, w
    cdef int W = s.W
    while s.head_ < s.trail_len_:
        var = s.trail_var[s.head_]
        val = s.assign[var]
        tix = _lix(var if val > 0 else -var)
        fix = _lix(-var if val > 0 else var)
        for o in range(s.occ_start[tix], s.occ_start[tix + 1]):
            c = s.occ_cl[o]
            if s.num_true[c] == 0:
                s.n_sat_ += 1
            s.num_true[c] += 1
        conflict = -1
        for o in range(s.occ_start[fix], s.occ_start[fix + 1]):
            c = s.occ_cl[o]
            s.num_free[c] -= 1
            if s.num_true[c] != 0 or conflict != -1:
                continue
            if s.num_free[c] == 0:
                conflict = c
            elif s.num_free[c] == 1:
                ulit = 0
                for p in range(s.start[c], s.start[c + 1]):
                    lt = s.lits[p]
                    v = lt if lt > 0 else -lt
                    if s.assign[v] == 0:
                        ulit = lt
                if ulit != 0:
                    uvar = ulit if ulit > 0 else -ulit
                    for w in range(W):
                        s.deps[uvar * W + w] = 0
                    for p in range(s.start[c], s.start[c + 1]):
                        lt = s.lits[p]
                        v = lt if lt > 0 else -lt
                        if v != uvar:
                            for w in range(W):
                                s.deps[uvar * W + w] |= s.deps[v * W + w]
                    j = s.trail_len_
                    s.assign[uvar] = 1 if ulit > 0 else -1
                    s.trail_var[j] = uvar
                    s.trail_cause[j] = CAUSE_UNIT
                    s.trail_reason[j] = c
                    s.trail_len_ = j + 1
        s.head_ += 1
        if conflict != -1:
            return conflict
    return -1


def undo_to(State s, int target):
    cdef int i, var, val, tix, fix, o, c
    while s.trail_len_ > target:
        i = s.trail_len_ - 1
        var = s.trail_var[i]
        val = s.assign[var]
        if i < s.head_:
            tix = _lix(var if val > 0 else -var)
            fix = _lix(-var if val > 0 else var)
            for o in range(s.occ_start[tix], s.occ_start[tix + 1]):
                c = s.occ_cl[o]
                s.num_true[c] -= 1
                if s.num_true[c] == 0:
                    s.n_sat_ -= 1
            for o in range(s.occ_start[fix], s.occ_start[fix + 1]):
                s.num_free[s.occ_cl[o]] += 1
        s.assign[var] = 0
        memset(s.deps + var * s.W, 0, s.W * sizeof(uint64_t))
        s.trail_len_ = i
    if s.head_ > s.trail_len_:
        s.head_ = s.trail_len_


def trail_len(State s):
    return s.trail_len_


def trail_entry(State s, int i):
    return s.trail_var[i], s.trail_cause[i]


def value_of(State s, int var):
    return s.assign[var]


cdef object _mask_to_int(State s, int var):
    cdef object out = 0
    cdef int w
    for w in range(s.W - 1, -1, -1):
        out = (out << 64) | s.deps[var * s.W + w]
    return out


def deps_of(State s, int var):
    return _mask_to_int(s, var)


def all_satisfied(State s):
    return s.n_sat_ == s.m


def clause_lits(State s, int c):
    return [s.lits[p] for p in range(s.start[c], s.start[c + 1])]


def clause_deps(State s, int c):
    cdef int p, lt, v, w
    cdef object out = 0
    cdef object word
    for w in range(s.W - 1, -1, -1):
        word = 0
        for p in range(s.start[c], s.start[c + 1]):
            lt = s.lits[p]
            v = lt if lt > 0 else -lt
            word |= s.deps[v * s.W + w]
        out = (out << 64) | word
    return out


def clause_free(State s, int c):
    return s.num_free[c]


def clause_true(State s, int c):
    return s.num_true[c]


def moms_pick(State s):
    cdef int c, p, lt, v, w, best, best_score, polarity
    if s.n_sat_ == s.m:
        return 0, 0
    w = -1
    for c in range(s.m):
        if s.num_true[c] == 0 and (w == -1 or s.num_free[c] < w):
            w = s.num_free[c]
    for v in range(s.n + 1):
        s.score[v] = 0
        s.pos[v] = 0
    for c in range(s.m):
        if s.num_true[c] != 0 or s.num_free[c] != w:
            continue
        for p in range(s.start[c], s.start[c + 1]):
            lt = s.lits[p]
            v = lt if lt > 0 else -lt
            if s.assign[v] == 0:
                s.score[v] += 1
                if lt > 0:
                    s.pos[v] += 1
    best = 0
    best_score = 0
    for v in range(1, s.n + 1):
        if s.score[v] > best_score:
            best_score = s.score[v]
            best = v
    polarity = 1 if 2 * s.pos[best] >= best_score else -1
    return best, polarity


def first_free_pick(State s):
    cdef int v
    for v in range(1, s.n + 1):
        if s.assign[v] == 0:
            return v, 1
    return 0, 0


def pure_literals(State s):
    cdef int c, p, lt, v
    for v in range(2 * s.n + 2):
        s.seen[v] = 0
    for c in range(s.m):
        if s.num_true[c] != 0:
            continue
        for p in range(s.start[c], s.start[c + 1]):
            lt = s.lits[p]
            s.seen[_lix(lt) - 2] = 1
    out = []
    for v in range(1, s.n + 1):
        if s.assign[v] != 0:
            continue
        if s.seen[2 * v - 2] and not s.seen[2 * v - 1]:
            out.append(v)
        elif s.seen[2 * v - 1] and not s.seen[2 * v - 2]:
            out.append(-v)
    return out


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def count_models_enum(list py_lits, list py_start, int n):
    """Exhaustive count via 64-assignment truth-table blocks."""
    cdef int m = len(py_start) - 1
    if n == 0:
        return 1 if m == 0 else 0
    cdef int L = len(py_lits)
    cdef int *lits = <int *>calloc(L if L else 1, sizeof(int))
    cdef int *start = <int *>calloc(m + 1, sizeof(int))
    cdef int i
    for i in range(L):
        lits[i] = py_lits[i]
    for i in range(m + 1):
        start[i] = py_start[i]
    cdef uint64_t cols[6]
    cols[0] = 0xAAAAAAAAAAAAAAAAULL
    cols[1] = 0xCCCCCCCCCCCCCCCCULL
    cols[2] = 0xF0F0F0F0F0F0F0F0ULL
    cols[3] = 0xFF00FF00FF00FF00ULL
    cols[4] = 0xFFFF0000FFFF0000ULL
    cols[5] = 0xFFFFFFFF00000000ULL
    cdef int b = n if n < 6 else 6
    cdef uint64_t full = <uint64_t>0xFFFFFFFFFFFFFFFFULL
    if b < 6:
        full = (<uint64_t>1 << (1 << b)) - 1
    cdef uint64_t hi_count = <uint64_t>1 << (n - b)
    cdef uint64_t hi, acc, cm
    cdef int c, p, lt, v
    cdef long long total = 0
    with nogil:
        for hi in range(hi_count):
            acc = full
            for c in range(m):
                cm = 0
                for p in range(start[c], start[c + 1]):
                    lt = lits[p]
                    v = (lt if lt > 0 else -lt) - 1
                    if v < b:
                        cm |= cols[v] if lt > 0 else (cols[v] ^ full)
                        if cm == full:
                            break
                    else:
                        if ((hi >> (v - b)) & 1) == (1 if lt > 0 else 0):
                            cm = full
                            break
                acc &= cm
                if acc == 0:
                    break
            total += __builtin_popcountll(acc & full)
    free(lits)
    free(start)
    return total
