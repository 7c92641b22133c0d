"""Exact model counting and satisfiability ratios.

Two independent routes: ENUM exhausts all 2^n assignments (truth-table
blocks in the kernel), COUNTING_DPLL runs a chronological DPLL that adds
2^u whenever a residual formula is satisfied with u variables still free.
Pure-literal elimination is never applied while counting (it would discard
models); backjumping is likewise disabled. Ratios are exact rationals so
2^n denominators never see float drift.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from ._kernel import impl as _K
from .cnf import Formula
from .errors import AbsentValueError, BudgetError
from .solver import _flatten


class CountMethod(enum.Enum):
    ENUM = "ENUM"
    COUNTING_DPLL = "COUNTING_DPLL"


@dataclass(frozen=True)
class CountResult:
    model_count: int
    n: int

    @property
    def satisfiability_ratio(self) -> Fraction:
        return Fraction(self.model_count, 1 << self.n)


ENUM_CAP = 26
COUNTING_DPLL_CAP = 40


def count_models(
    formula: Formula,
    method: CountMethod = CountMethod.ENUM,
    cap: int | None = None,
) -> CountResult:
    if method is CountMethod.ENUM:
        limit = ENUM_CAP if cap is None else cap
        if formula.n > limit:
            raise BudgetError(f"ENUM over n={formula.n} exceeds cap {limit}")
        lits, start = _flatten(formula)
        return CountResult(_K.count_models_enum(lits, start, formula.n), formula.n)
    limit = COUNTING_DPLL_CAP if cap is None else cap
    if formula.n > limit:
        raise BudgetError(f"COUNTING_DPLL over n={formula.n} exceeds cap {limit}")
    return CountResult(_counting_dpll(formula), formula.n)


def _counting_dpll(formula: Formula) -> int:
    n = formula.n
    lits, start = _flatten(formula)
    state = _K.make_state(n, lits, start)
    for idx, clause in enumerate(formula.clauses):
        if len(clause) == 1:
            lit = clause[0]
            if _K.value_of(state, abs(lit)) == 0:
                _K.push(state, abs(lit), 1 if lit > 0 else -1, 1, idx, 0)
    total = 0
    frames: list[tuple[int, int, int]] = []  # (var, first_val, trail mark)
    flipped: list[bool] = []
    while True:
        conflict = _K.propagate(state)
        exhausted = conflict != -1
        if not exhausted:
            if _K.all_satisfied(state):
                total += 1 << (n - _K.trail_len(state))
                exhausted = True
            else:
                var, pol = _K.moms_pick(state)
                frames.append((var, pol, _K.trail_len(state)))
                flipped.append(False)
                _K.push(state, var, pol, 0, -1, 0)
                continue
        # chronological retreat; counting must visit both branches everywhere
        while flipped and flipped[-1]:
            frames.pop()
            flipped.pop()
        if not frames:
            return total
        var, first_val, mark = frames[-1]
        flipped[-1] = True
        _K.undo_to(state, mark)
        _K.push(state, var, -first_val, 0, -1, 0)


def satisfiability_ratio(record) -> Fraction:
    """Exact model_count / 2^n for a pool record; requires a counted record."""
    if record.model_count is None:
        raise AbsentValueError(f"record {record.id} has no model count")
    return Fraction(record.model_count, 1 << record.n)
