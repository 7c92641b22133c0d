"""CNF formulas over integer variables, evaluation semantics, and DIMACS I/O.

Literals are nonzero signed integers in DIMACS convention: ``7`` is variable
7 unnegated, ``-7`` is its negation. Variables are numbered from 1 to ``n``.
An assignment is a plain ``dict[int, bool]`` and may be partial. Formulas are
immutable after construction and safe to share between threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import DimacsError, MalformedFormulaError

Assignment = Mapping[int, bool]


@dataclass(frozen=True)
class Formula:
    """A CNF formula: ``n`` variables and an ordered sequence of clauses.

    Duplicate clauses are preserved; the clause/variable ratio must account
    for every sampled clause. Clause width is not restricted here (generators
    enforce their own width guarantees).
    """

    n: int
    clauses: tuple[tuple[int, ...], ...]

    def __init__(self, n: int, clauses: Iterable[Sequence[int]]):
        if n < 0:
            raise MalformedFormulaError(f"variable count must be >= 0, got {n}")
        frozen = []
        for idx, clause in enumerate(clauses):
            lits = tuple(int(lit) for lit in clause)
            if not lits:
                raise MalformedFormulaError(f"clause {idx} is empty")
            for lit in lits:
                if lit == 0:
                    raise MalformedFormulaError(f"clause {idx} contains literal 0")
                if abs(lit) > n:
                    raise MalformedFormulaError(
                        f"clause {idx} references variable {abs(lit)} > n={n}"
                    )
            frozen.append(lits)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "clauses", tuple(frozen))

    @property
    def m(self) -> int:
        return len(self.clauses)

    @property
    def alpha(self) -> Fraction:
        """Clause density m/n, exact. Undefined for n = 0."""
        if self.n == 0:
            raise MalformedFormulaError("alpha undefined for n = 0")
        return Fraction(self.m, self.n)

    def variables(self) -> set[int]:
        return {abs(lit) for clause in self.clauses for lit in clause}


class EvalStatus(enum.Enum):
    SATISFIED = "SATISFIED"
    VIOLATED = "VIOLATED"
    UNDETERMINED = "UNDETERMINED"


@dataclass(frozen=True)
class EvalResult:
    status: EvalStatus
    clause_index: int | None = None  # lowest falsified clause, 0-based

    def __bool__(self) -> bool:
        return self.status is EvalStatus.SATISFIED


def evaluate(formula: Formula, assignment: Assignment) -> EvalResult:
    """Evaluate a (possibly partial) assignment against every clause.

    SATISFIED iff every clause has at least one true literal. VIOLATED
    reports the lowest-index clause whose literals are all assigned false.
    UNDETERMINED otherwise (some clause has no true literal yet but still
    has unassigned literals).
    """
    for var in assignment:
        if var < 1 or var > formula.n:
            raise MalformedFormulaError(
                f"assignment maps variable {var} outside [1, {formula.n}]"
            )
    undetermined = False
    for idx, clause in enumerate(formula.clauses):
        has_true = False
        has_free = False
        for lit in clause:
            val = assignment.get(abs(lit))
            if val is None:
                has_free = True
            elif val == (lit > 0):
                has_true = True
                break
        if has_true:
            continue
        if not has_free:
            return EvalResult(EvalStatus.VIOLATED, idx)
        undetermined = True
    if undetermined:
        return EvalResult(EvalStatus.UNDETERMINED)
    return EvalResult(EvalStatus.SATISFIED)


def reduce(formula: Formula, assignment: Assignment) -> tuple[tuple[int, ...], ...]:
    """Simplify under an assignment: drop satisfied clauses, delete false literals.

    Returns raw clause tuples rather than a Formula because the result may
    legitimately contain an empty clause, which signals a conflict. No literal
    over an assigned variable survives. Satisfiability relative to extensions
    of the assignment is preserved.
    """
    out = []
    for clause in formula.clauses:
        satisfied = False
        kept = []
        for lit in clause:
            val = assignment.get(abs(lit))
            if val is None:
                kept.append(lit)
            elif val == (lit > 0):
                satisfied = True
                break
        if not satisfied:
            out.append(tuple(kept))
    return tuple(out)


def parse_dimacs(text: str) -> Formula:
    """Parse DIMACS CNF: ``c`` comments, ``p cnf n m`` header, 0-terminated clauses."""
    n = None
    declared_m = None
    clauses: list[list[int]] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            if n is not None:
                raise DimacsError("duplicate header", lineno)
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"bad header {line!r}", lineno)
            try:
                n, declared_m = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"non-integer header fields in {line!r}", lineno)
            continue
        if n is None:
            raise DimacsError("clause before 'p cnf' header", lineno)
        for token in line.split():
            try:
                lit = int(token)
            except ValueError:
                raise DimacsError(f"non-integer token {token!r}", lineno)
            if lit == 0:
                if not current:
                    raise DimacsError("zero before any literal (empty clause)", lineno)
                clauses.append(current)
                current = []
            else:
                if abs(lit) > n:
                    raise DimacsError(
                        f"literal {lit} references variable beyond n={n}", lineno
                    )
                current.append(lit)
    last_line = len(text.splitlines())
    if current:
        raise DimacsError("unterminated clause at end of input", last_line)
    if n is None:
        raise DimacsError("missing 'p cnf' header", last_line)
    if declared_m != len(clauses):
        raise DimacsError(
            f"header declares {declared_m} clauses, found {len(clauses)}", last_line
        )
    return Formula(n, clauses)


def emit_dimacs(formula: Formula, comments: Sequence[str] = ()) -> str:
    """Emit DIMACS text. ``comments`` are written as leading ``c`` lines."""
    lines = [f"c {c}" if c else "c" for c in comments]
    lines.append(f"p cnf {formula.n} {formula.m}")
    for clause in formula.clauses:
        lines.append(" ".join(str(lit) for lit in clause) + " 0")
    return "\n".join(lines) + "\n"
