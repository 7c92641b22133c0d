"""Pure-Python search kernel.

Holds the mutable per-solve state (assignment trail, clause counters,
occurrence lists) and the hot scans: unit propagation, MOMS scoring, pure
literal detection, trail undo, and exhaustive model enumeration. The
compiled kernel in ``_ckernel.pyx`` implements the exact same operations in
the same iteration order; the two must stay behaviourally identical (the
test suite compares them directly).

Conventions shared by both kernels:
  * ``assign[v]`` is 0 (free), 1 (true) or -1 (false); variables are 1-based.
  * ``deps[v]`` is a bitmask of decision levels (bit L = level L) whose
    current branch polarities entail v's assignment: a decision depends on
    itself only, a propagated literal on the union over its reason clause,
    a flipped branch on the decisions that refuted its first branch. These
    exact sets are what make non-chronological backjumps sound.
  * trail causes: 0 = DECISION, 1 = UNIT, 2 = PURE.
  * counter updates are applied when a trail entry is *processed* (head
    pointer), so undo must only revert counters for entries below ``head``.
"""

from __future__ import annotations

LANE = "py"

CAUSE_DECISION = 0
CAUSE_UNIT = 1
CAUSE_PURE = 2


class State:
    __slots__ = (
        "n", "m", "lits", "start", "occ_start", "occ_cl",
        "assign", "deps", "num_free", "num_true", "n_sat",
        "trail_var", "trail_cause", "trail_reason", "trail_len", "head",
    )

    def __init__(self, n: int, lits: list[int], start: list[int]):
        self.n = n
        self.m = len(start) - 1
        self.lits = lits
        self.start = start
        # occurrence lists in CSR form, bucket per signed literal:
        # index 2v for literal v, 2v+1 for -v
        counts = [0] * (2 * n + 2)
        for lit in lits:
            counts[_lix(lit)] += 1
        occ_start = [0] * (2 * n + 3)
        for i in range(2 * n + 2):
            occ_start[i + 1] = occ_start[i] + counts[i]
        fill = occ_start[:-1].copy()
        occ_cl = [0] * len(lits)
        for c in range(self.m):
            for p in range(start[c], start[c + 1]):
                b = _lix(lits[p])
                occ_cl[fill[b]] = c
                fill[b] += 1
        self.occ_start = occ_start
        self.occ_cl = occ_cl
        self.assign = [0] * (n + 1)
        self.deps = [0] * (n + 1)
        self.num_free = [start[c + 1] - start[c] for c in range(self.m)]
        self.num_true = [0] * self.m
        self.n_sat = 0
        self.trail_var = [0] * (n + 1)
        self.trail_cause = [0] * (n + 1)
        self.trail_reason = [-1] * (n + 1)
        self.trail_len = 0
        self.head = 0


def _lix(lit: int) -> int:
    return 2 * lit if lit > 0 else -2 * lit + 1


def make_state(n: int, lits: list[int], start: list[int]) -> State:
    return State(n, lits, start)


def push(state: State, var: int, value: int, cause: int, reason: int, deps: int) -> None:
    """Append an assignment to the trail; counters apply on propagate()."""
    state.assign[var] = value
    state.deps[var] = deps
    i = state.trail_len
    state.trail_var[i] = var
    state.trail_cause[i] = cause
    state.trail_reason[i] = reason
    state.trail_len = i + 1


def propagate(state: State) -> int:
    """Process pending trail entries to fixpoint.

    Returns the index of the first conflicting clause, or -1. Each entry's
    counter updates are applied atomically (the whole occurrence scan runs
    even after a conflict inside it) so that undo_to() stays exact.
    """
    assign = state.assign
    deps = state.deps
    lits = state.lits
    start = state.start
    occ_start = state.occ_start
    occ_cl = state.occ_cl
    num_free = state.num_free
    num_true = state.num_true
    while state.head < state.trail_len:
        var = state.trail_var[state.head]
        val = assign[var]
        tix = _lix(var if val > 0 else -var)
        fix = _lix(-var if val > 0 else var)
        for o in range(occ_start[tix], occ_start[tix + 1]):
            c = occ_cl[o]
            if num_true[c] == 0:
                state.n_sat += 1
            num_true[c] += 1
        conflict = -1
        for o in range(occ_start[fix], occ_start[fix + 1]):
            c = occ_cl[o]
            num_free[c] -= 1
            if num_true[c] != 0 or conflict != -1:
                continue
            if num_free[c] == 0:
                conflict = c
            elif num_free[c] == 1:
                ulit = 0
                udeps = 0
                for p in range(start[c], start[c + 1]):
                    lt = lits[p]
                    v = lt if lt > 0 else -lt
                    if assign[v] == 0:
                        ulit = lt
                    else:
                        udeps |= deps[v]
                # the sole free slot may already be pending on the trail
                # (counter lag); its own processing will settle the clause
                if ulit != 0:
                    push(
                        state,
                        ulit if ulit > 0 else -ulit,
                        1 if ulit > 0 else -1,
                        CAUSE_UNIT,
                        c,
                        udeps,
                    )
        state.head += 1
        if conflict != -1:
            return conflict
    return -1


def undo_to(state: State, target: int) -> None:
    """Pop trail entries down to length ``target``, reverting counters."""
    assign = state.assign
    occ_start = state.occ_start
    occ_cl = state.occ_cl
    num_free = state.num_free
    num_true = state.num_true
    while state.trail_len > target:
        i = state.trail_len - 1
        var = state.trail_var[i]
        val = assign[var]
        if i < state.head:
            tix = _lix(var if val > 0 else -var)
            fix = _lix(-var if val > 0 else var)
            for o in range(occ_start[tix], occ_start[tix + 1]):
                c = occ_cl[o]
                num_true[c] -= 1
                if num_true[c] == 0:
                    state.n_sat -= 1
            for o in range(occ_start[fix], occ_start[fix + 1]):
                num_free[occ_cl[o]] += 1
        assign[var] = 0
        state.deps[var] = 0
        state.trail_len = i
    if state.head > state.trail_len:
        state.head = state.trail_len


def trail_len(state: State) -> int:
    return state.trail_len


def trail_entry(state: State, i: int) -> tuple[int, int]:
    return state.trail_var[i], state.trail_cause[i]


def value_of(state: State, var: int) -> int:
    return state.assign[var]


def deps_of(state: State, var: int) -> int:
    return state.deps[var]


def all_satisfied(state: State) -> bool:
    return state.n_sat == state.m


def clause_lits(state: State, c: int) -> list[int]:
    return state.lits[state.start[c]:state.start[c + 1]]


def clause_deps(state: State, c: int) -> int:
    """Union of dependency masks over the clause's variables."""
    out = 0
    for lit in clause_lits(state, c):
        out |= state.deps[abs(lit)]
    return out


def clause_free(state: State, c: int) -> int:
    return state.num_free[c]


def clause_true(state: State, c: int) -> int:
    return state.num_true[c]


def moms_pick(state: State) -> tuple[int, int]:
    """MOMS branching: most occurrences among minimum-width open clauses.

    Ties break to the lowest variable index; polarity is the more frequent
    one in those clauses, ties to positive. Returns (0, 0) when every clause
    is satisfied.
    """
    if state.n_sat == state.m:
        return 0, 0
    num_free = state.num_free
    num_true = state.num_true
    w = -1
    for c in range(state.m):
        if num_true[c] == 0 and (w == -1 or num_free[c] < w):
            w = num_free[c]
    score = [0] * (state.n + 1)
    pos = [0] * (state.n + 1)
    assign = state.assign
    lits = state.lits
    start = state.start
    for c in range(state.m):
        if num_true[c] != 0 or num_free[c] != w:
            continue
        for p in range(start[c], start[c + 1]):
            lt = lits[p]
            v = lt if lt > 0 else -lt
            if assign[v] == 0:
                score[v] += 1
                if lt > 0:
                    pos[v] += 1
    best = 0
    best_score = 0
    for v in range(1, state.n + 1):
        if score[v] > best_score:
            best_score = score[v]
            best = v
    polarity = 1 if 2 * pos[best] >= best_score else -1
    return best, polarity


def first_free_pick(state: State) -> tuple[int, int]:
    """Fallback branching when MOMS is disabled: lowest free variable, true."""
    assign = state.assign
    for v in range(1, state.n + 1):
        if assign[v] == 0:
            return v, 1
    return 0, 0


def pure_literals(state: State) -> list[int]:
    """Signed literals pure among open clauses, ascending by variable."""
    seen_pos = [False] * (state.n + 1)
    seen_neg = [False] * (state.n + 1)
    num_true = state.num_true
    lits = state.lits
    start = state.start
    assign = state.assign
    for c in range(state.m):
        if num_true[c] != 0:
            continue
        for p in range(start[c], start[c + 1]):
            lt = lits[p]
            if lt > 0:
                seen_pos[lt] = True
            else:
                seen_neg[-lt] = True
    out = []
    for v in range(1, state.n + 1):
        if assign[v] != 0:
            continue
        if seen_pos[v] and not seen_neg[v]:
            out.append(v)
        elif seen_neg[v] and not seen_pos[v]:
            out.append(-v)
    return out


def count_models_enum(lits: list[int], start: list[int], n: int) -> int:
    """Exhaustive model count over all 2^n assignments.

    Assignments are enumerated in blocks as truth-table bit columns packed
    into big integers, so the inner work is C-speed bitwise ops: a clause's
    block mask is the OR of its literal columns, the formula mask the AND
    over clauses, and the popcount accumulates satisfied assignments.
    """
    m = len(start) - 1
    if n == 0:
        return 1 if m == 0 else 0
    b = min(n, 16)
    width = 1 << b
    full = (1 << width) - 1
    cols = []
    for j in range(b):
        period = 1 << j
        x = ((1 << period) - 1) << period
        span = 2 * period
        while span < width:
            x |= x << span
            span *= 2
        cols.append(x)
    clauses = [lits[start[c]:start[c + 1]] for c in range(m)]
    total = 0
    for hi in range(1 << (n - b)):
        acc = full
        for clause in clauses:
            cm = 0
            for lt in clause:
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
        total += acc.bit_count()
    return total
