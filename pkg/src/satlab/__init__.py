"""satlab: a laboratory for characterizing solvers and LLMs on random SAT
across the satisfiability phase transition."""

from ._kernel import LANE as KERNEL_LANE
from .cnf import Assignment, EvalResult, EvalStatus, Formula, emit_dimacs, evaluate, parse_dimacs
from .cnf import reduce as reduce_formula
from .counter import CountMethod, CountResult, count_models, satisfiability_ratio
from .generators import (
    Family,
    GenSpec,
    InstanceRecord,
    alpha_grid,
    assign_regions,
    build_pool,
    dataset_alpha_grid,
    gen_horn13,
    gen_ksat,
    read_pool,
    write_pool,
)
from .solver import (
    SolveMode,
    SolveOptions,
    SolveOutcome,
    SolveStats,
    Verdict,
    choose_branch_variable,
    export_trace,
    pure_literal_eliminate,
    solve,
    unit_propagate,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment", "CountMethod", "CountResult", "EvalResult", "EvalStatus",
    "Family", "Formula", "GenSpec", "InstanceRecord", "KERNEL_LANE",
    "SolveMode", "SolveOptions", "SolveOutcome", "SolveStats", "Verdict",
    "alpha_grid", "assign_regions", "build_pool", "choose_branch_variable",
    "count_models", "dataset_alpha_grid", "emit_dimacs", "evaluate",
    "export_trace", "gen_horn13", "gen_ksat", "parse_dimacs",
    "pure_literal_eliminate", "read_pool", "reduce_formula",
    "satisfiability_ratio", "solve", "unit_propagate", "write_pool",
]
