"""Instrumented DPLL solving: decision and search modes, unit propagation,
pure-literal elimination, MOMS branching, and conflict-directed backjumping.

The search is iterative (explicit frame stack) so deep backtracking cannot
overflow the call stack. Dependency sets drive the backjumps: every assigned
variable carries the exact set of decision levels (a bitmask) whose current
branch polarities entail it -- a decision depends on itself, a unit literal
on the union over its reason clause, a flipped branch on the decisions that
refuted its first branch. A conflict therefore implicates exactly the union
of its clause's dependency sets, and the retreat target is the deepest
decision level in that union. Chronological backtracking (the ablation mode)
ignores dependencies and flips the nearest untried branch.

Determinism: identical formula and options produce identical counters and
traces; ``wall_time`` is the only non-reproducible stat field.
"""

from __future__ import annotations

import enum
import random
import time
from dataclasses import dataclass, field

from ._kernel import impl as _K
from .cnf import Formula
from .errors import NoTraceError

CAUSE_NAMES = {0: "DECISION", 1: "UNIT", 2: "PURE"}


class Verdict(enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    LIMIT_EXCEEDED = "LIMIT_EXCEEDED"


class SolveMode(enum.Enum):
    DECISION = "DECISION"
    SEARCH = "SEARCH"


@dataclass
class SolveOptions:
    use_pure: bool = True
    use_moms: bool = True
    use_backjumping: bool = True
    lookahead: bool = False  # polarity probing only; never changes verdicts
    node_budget: int = 10_000_000
    timeout_s: float | None = None
    trace: bool = False
    decision_seed: int | None = None  # randomized MOMS tie-break when set


@dataclass
class SolveStats:
    decisions: int = 0
    unit_propagations: int = 0
    pure_literal_fixes: int = 0
    backtracks: int = 0  # one per conflict handled
    backjumps: int = 0  # retreats that skipped over at least one level
    max_depth: int = 0
    wall_time: float = 0.0

    @property
    def nodes(self) -> int:
        return self.decisions + self.unit_propagations + self.pure_literal_fixes

    def counters(self) -> tuple[int, ...]:
        """Everything except wall_time, for determinism comparisons."""
        return (
            self.decisions, self.unit_propagations, self.pure_literal_fixes,
            self.backtracks, self.backjumps, self.max_depth,
        )


@dataclass
class TraceNode:
    var: int
    polarity: bool
    cause: str
    children: list = field(default_factory=list)
    leaf: str | None = None


@dataclass
class TraceStub:
    """Placeholder child for a branch the search never entered."""

    leaf: str = "UNEXPLORED"


@dataclass
class SolveOutcome:
    verdict: Verdict
    assignment: dict[int, bool] | None
    stats: SolveStats
    trace: TraceNode | None  # synthetic root; real nodes are its descendants


@dataclass
class _Frame:
    var: int
    first_val: int
    mark: int  # trail length before the decision was pushed
    flipped: bool = False
    conflict_mask: int = 0  # levels implicated in this frame's failures


def _flatten(formula: Formula) -> tuple[list[int], list[int]]:
    lits: list[int] = []
    start = [0]
    for clause in formula.clauses:
        lits.extend(clause)
        start.append(len(lits))
    return lits, start


def solve(
    formula: Formula,
    mode: SolveMode = SolveMode.DECISION,
    options: SolveOptions | None = None,
) -> SolveOutcome:
    opts = options or SolveOptions()
    t0 = time.perf_counter()
    stats = SolveStats()
    lits, start = _flatten(formula)
    state = _K.make_state(formula.n, lits, start)

    tracing = opts.trace
    root = TraceNode(var=0, polarity=True, cause="ROOT") if tracing else None
    path: list[TraceNode] = []  # node per trail entry, current path only
    seen = 0  # trail entries already counted into stats/trace

    rng = random.Random(opts.decision_seed) if opts.decision_seed is not None else None

    def sync() -> None:
        nonlocal seen
        new = _K.trail_len(state)
        for i in range(seen, new):
            var, cause = _K.trail_entry(state, i)
            if cause == 0:
                stats.decisions += 1
            elif cause == 1:
                stats.unit_propagations += 1
            else:
                stats.pure_literal_fixes += 1
            if tracing:
                node = TraceNode(var, _K.value_of(state, var) > 0, CAUSE_NAMES[cause])
                (path[i - 1] if i > 0 else root).children.append(node)
                path.append(node)
        seen = new

    def rewind(mark: int) -> None:
        nonlocal seen
        _K.undo_to(state, mark)
        seen = mark
        if tracing:
            del path[mark:]

    def finish(verdict: Verdict) -> SolveOutcome:
        stats.wall_time = time.perf_counter() - t0
        assignment = None
        if verdict is Verdict.SAT and mode is SolveMode.SEARCH:
            assignment = {
                v: _K.value_of(state, v) > 0 if _K.value_of(state, v) != 0 else True
                for v in range(1, formula.n + 1)
            }
        if tracing and verdict is not Verdict.UNSAT:
            for fr in frames:
                if not fr.flipped:
                    parent = path[fr.mark - 1] if fr.mark > 0 else root
                    parent.children.append(TraceStub())
        return SolveOutcome(verdict, assignment, stats, root)

    # bootstrap: clauses that are unit from the start (root-entailed)
    for idx, clause in enumerate(formula.clauses):
        if len(clause) == 1:
            lit = clause[0]
            v = abs(lit)
            if _K.value_of(state, v) == 0:
                _K.push(state, v, 1 if lit > 0 else -1, 1, idx, 0)

    frames: list[_Frame] = []

    def pick() -> tuple[int, int]:
        if rng is not None and opts.use_moms:
            return _moms_pick_randomized(state, rng)
        if opts.use_moms:
            return _K.moms_pick(state)
        return _K.first_free_pick(state)

    while True:
        conflict = _K.propagate(state)
        sync()
        if conflict == -1:
            if opts.use_pure:
                while True:
                    pures = _K.pure_literals(state)
                    if not pures:
                        break
                    for lit in pures:
                        _K.push(state, abs(lit), 1 if lit > 0 else -1, 2, -1, 0)
                    _K.propagate(state)  # pure fixes cannot conflict or imply
                    sync()
            if _K.all_satisfied(state):
                if tracing:
                    (path[-1] if path else root).leaf = "SOLUTION"
                return finish(Verdict.SAT)
            if stats.nodes >= opts.node_budget:
                return finish(Verdict.LIMIT_EXCEEDED)
            if opts.timeout_s is not None and time.perf_counter() - t0 > opts.timeout_s:
                return finish(Verdict.LIMIT_EXCEEDED)
            var, pol = pick()
            if opts.lookahead:
                pol = _probe_polarity(state, var, pol)
            frames.append(_Frame(var, pol, _K.trail_len(state)))
            _K.push(state, var, pol, 0, -1, 1 << len(frames))
            stats.max_depth = max(stats.max_depth, len(frames))
            continue

        # conflict handling
        stats.backtracks += 1
        if tracing and path:
            path[-1].leaf = "CONFLICT"
        mask = _K.clause_deps(state, conflict)
        while True:
            if opts.use_backjumping:
                if mask == 0:
                    return finish(Verdict.UNSAT)  # conflict below any decision
                h = mask.bit_length() - 1
                if h < len(frames):
                    stats.backjumps += 1
                del frames[h:]
                frame = frames[-1]
                frame.conflict_mask |= mask & ~(1 << h)
            else:
                if not frames:
                    return finish(Verdict.UNSAT)
                frame = frames[-1]
                h = len(frames)
            rewind(frame.mark)
            if not frame.flipped:
                frame.flipped = True
                flip_deps = frame.conflict_mask if opts.use_backjumping else 1 << h
                _K.push(state, frame.var, -frame.first_val, 0, -1, flip_deps)
                break
            mask = frame.conflict_mask
            frames.pop()


def _probe_polarity(state, var: int, pol: int) -> int:
    """Failed-literal lookahead: if the preferred polarity conflicts
    immediately, branch on the other one first. Probe work is undone and not
    counted, so stats and traces stay consistent with the probe-free tree."""
    mark = _K.trail_len(state)
    _K.push(state, var, pol, 0, -1, 0)
    conflict = _K.propagate(state)
    _K.undo_to(state, mark)
    return -pol if conflict != -1 else pol


def _moms_pick_randomized(state, rng: random.Random) -> tuple[int, int]:
    """MOMS with seeded random tie-breaking (optional, off by default)."""
    if _K.all_satisfied(state):
        return 0, 0
    score: dict[int, int] = {}
    pos: dict[int, int] = {}
    w = None
    open_idx = []
    for c in range(state.m):
        if _K.clause_true(state, c) == 0:
            open_idx.append(c)
            fw = _K.clause_free(state, c)
            if w is None or fw < w:
                w = fw
    for c in open_idx:
        if _K.clause_free(state, c) != w:
            continue
        for lit in _K.clause_lits(state, c):
            v = abs(lit)
            if _K.value_of(state, v) == 0:
                score[v] = score.get(v, 0) + 1
                if lit > 0:
                    pos[v] = pos.get(v, 0) + 1
    best_score = max(score.values())
    ties = sorted(v for v, s in score.items() if s == best_score)
    v = rng.choice(ties)
    p = pos.get(v, 0)
    return v, 1 if 2 * p >= best_score else -1


# ---------------------------------------------------------------------------
# operation-level wrappers (used directly by tests and the lab's tooling)

@dataclass
class PropagationResult:
    assignment: dict[int, bool]
    conflict: bool


def _seeded_state(formula: Formula, assignment) -> tuple:
    lits, start = _flatten(formula)
    state = _K.make_state(formula.n, lits, start)
    for v in sorted(assignment):
        _K.push(state, v, 1 if assignment[v] else -1, 0, -1, 0)
    return state


def unit_propagate(formula: Formula, assignment=None) -> PropagationResult:
    """Run unit propagation to fixpoint from a partial assignment.

    Width-1 input clauses seed the propagation. A conflict is reported as a
    value, with the assignment at the point the empty clause appeared.
    """
    state = _seeded_state(formula, assignment or {})
    for idx, clause in enumerate(formula.clauses):
        if len(clause) == 1:
            lit = clause[0]
            if _K.value_of(state, abs(lit)) == 0:
                _K.push(state, abs(lit), 1 if lit > 0 else -1, 1, idx, 0)
    conflict = _K.propagate(state)
    out = {
        v: _K.value_of(state, v) > 0
        for v in range(1, formula.n + 1)
        if _K.value_of(state, v) != 0
    }
    return PropagationResult(out, conflict != -1)


def pure_literal_eliminate(formula: Formula, assignment=None) -> dict[int, bool]:
    """Assign every variable that is pure among unsatisfied clauses (to
    fixpoint, since each round can satisfy clauses and expose new pures)."""
    state = _seeded_state(formula, assignment or {})
    _K.propagate(state)
    while True:
        pures = _K.pure_literals(state)
        if not pures:
            break
        for lit in pures:
            _K.push(state, abs(lit), 1 if lit > 0 else -1, 2, -1, 0)
        _K.propagate(state)
    return {
        v: _K.value_of(state, v) > 0
        for v in range(1, formula.n + 1)
        if _K.value_of(state, v) != 0
    }


def choose_branch_variable(formula: Formula, assignment=None) -> tuple[int, bool]:
    """MOMS pick for the reduced formula under a partial assignment."""
    state = _seeded_state(formula, assignment or {})
    conflict = _K.propagate(state)
    if conflict != -1:
        raise ValueError("formula is conflicting under the given assignment")
    var, pol = _K.moms_pick(state)
    if var == 0:
        raise ValueError("formula already satisfied; nothing to branch on")
    return var, pol > 0


def export_trace(outcome: SolveOutcome) -> dict:
    """Serialize a search trace as a JSON-able tree.

    Node order follows visit order, except that the two branches of one
    decision variable are normalized True-first (left branch = True). Stub
    children ``{"leaf": "UNEXPLORED"}`` mark branches never entered.
    """
    if outcome.trace is None:
        raise NoTraceError("solve() ran with tracing disabled")

    def conv(node: TraceNode) -> dict:
        out: dict = {
            "var": node.var,
            "polarity": node.polarity,
            "cause": node.cause,
            "children": _ordered_children(node),
        }
        if node.leaf:
            out["leaf"] = node.leaf
        return out

    def _ordered_children(node: TraceNode) -> list:
        kids = list(node.children)
        for i in range(len(kids) - 1):
            a, b = kids[i], kids[i + 1]
            if (
                isinstance(a, TraceNode) and isinstance(b, TraceNode)
                and a.cause == "DECISION" and b.cause == "DECISION"
                and a.var == b.var and not a.polarity and b.polarity
            ):
                kids[i], kids[i + 1] = b, a
        return [
            conv(k) if isinstance(k, TraceNode) else {"leaf": k.leaf} for k in kids
        ]

    doc: dict = {"children": _ordered_children(outcome.trace)}
    if outcome.trace.leaf:
        doc["leaf"] = outcome.trace.leaf
    return doc


def count_trace_nodes(doc: dict) -> int:
    """Number of real assignment nodes in an exported trace document."""
    total = 0
    for child in doc.get("children", []):
        if "cause" in child:
            total += 1 + count_trace_nodes(child)
    return total
