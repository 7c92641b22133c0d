"""Prompt encodings: menu puzzles, raw CNF, and translate-to-CNF.

A formula becomes a menu puzzle by sampling one food item per variable
(without replacement) and one person per clause: the person likes the items
of the clause's positive literals and dislikes the negated ones. Decoders
are total over arbitrary model output; the worst outcome is an UNPARSEABLE
claim, never an exception. Prompt wording lives in versioned template files
and is part of the experiment's identity; run manifests record the template
digests.
"""

from __future__ import annotations

import enum
import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from importlib import resources

from .cnf import Formula
from .errors import EncodingError, TranslateParseError
from .solver import SolveMode

Task = SolveMode  # DECISION / SEARCH


class PromptEncoding(enum.Enum):
    MENU = "menu"
    CNF = "cnf"
    TRANSLATE = "translate"


class ClaimKind(enum.Enum):
    SAT_WITH = "SAT_WITH"
    UNSAT_CLAIM = "UNSAT_CLAIM"
    UNPARSEABLE = "UNPARSEABLE"


@dataclass(frozen=True)
class Person:
    name: str
    likes: tuple[str, ...]
    dislikes: tuple[str, ...]


@dataclass(frozen=True)
class MenuPuzzle:
    var_to_item: dict[int, str]
    people: tuple[Person, ...]
    formula: Formula

    @property
    def item_to_var(self) -> dict[str, int]:
        return {item: var for var, item in self.var_to_item.items()}


@dataclass
class SubjectAnswer:
    task: Task
    kind: ClaimKind
    raw_text: str
    assignment: dict[int, bool] | None = None
    orderable: tuple[str, ...] = ()
    not_orderable: tuple[str, ...] = ()
    reason: str | None = None
    warnings: tuple[str, ...] = ()
    token_usage: dict | None = None


def _data_text(name: str) -> str:
    return resources.files("satlab.data").joinpath(name).read_text(encoding="utf-8")


def load_item_pool() -> list[str]:
    return _data_text("foods.txt").split()


def load_name_pool() -> list[str]:
    return _data_text("names.txt").split()


def system_text(encoding: PromptEncoding) -> str:
    return _data_text(f"templates/{encoding.value}_system.txt").strip()


def template_versions() -> dict[str, str]:
    """Content digests of the prompt templates, recorded in run manifests."""
    out = {}
    for enc in PromptEncoding:
        text = system_text(enc)
        out[enc.value] = hashlib.sha256(text.encode()).hexdigest()[:12]
    return out


def _sample_prefix(rng: random.Random, pool: list[str], k: int) -> list[str]:
    pool = list(pool)
    for j in range(k):
        t = rng.randrange(j, len(pool))
        pool[j], pool[t] = pool[t], pool[j]
    return pool[:k]


# ---------------------------------------------------------------------------
# SAT-Menu

def build_menu_puzzle(
    formula: Formula,
    name_pool: list[str] | None = None,
    item_pool: list[str] | None = None,
    seed: int = 0,
) -> MenuPuzzle:
    items_all = item_pool if item_pool is not None else load_item_pool()
    names_all = name_pool if name_pool is not None else load_name_pool()
    if len(set(items_all)) < formula.n:
        raise EncodingError(
            f"item pool has {len(set(items_all))} distinct items, need {formula.n}"
        )
    if len(set(names_all)) < formula.m:
        raise EncodingError(
            f"name pool has {len(set(names_all))} distinct names, need {formula.m}"
        )
    rng = random.Random(seed)
    items = _sample_prefix(rng, items_all, formula.n)
    names = _sample_prefix(rng, names_all, formula.m)
    var_to_item = {v: items[v - 1] for v in range(1, formula.n + 1)}
    people = tuple(
        Person(
            name=names[i],
            likes=tuple(var_to_item[lit] for lit in clause if lit > 0),
            dislikes=tuple(var_to_item[-lit] for lit in clause if lit < 0),
        )
        for i, clause in enumerate(formula.clauses)
    )
    return MenuPuzzle(var_to_item, people, formula)


def menu_user_block(puzzle: MenuPuzzle) -> str:
    parts = []
    for person in puzzle.people:
        bits = []
        if person.likes:
            bits.append("Likes " + ", ".join(person.likes) + ".")
        if person.dislikes:
            bits.append("Dislikes " + ", ".join(person.dislikes) + ".")
        parts.append(f"{person.name}: " + " ".join(bits))
    return "Preferences: " + " ".join(parts)


def encode_menu(
    formula: Formula,
    name_pool: list[str] | None = None,
    item_pool: list[str] | None = None,
    seed: int = 0,
) -> tuple[MenuPuzzle, str]:
    puzzle = build_menu_puzzle(formula, name_pool, item_pool, seed)
    prompt = system_text(PromptEncoding.MENU) + "\n\n" + menu_user_block(puzzle)
    return puzzle, prompt


_FENCE_RE = re.compile(r"```[a-zA-Z]*\n?(.*?)```", re.S)


def _split_items(raw: str) -> list[str]:
    out = []
    for piece in raw.split(","):
        item = piece.strip().strip("'\"`").strip()
        if item:
            out.append(item)
    return out


def decode_menu_answer(text: str, puzzle: MenuPuzzle, task: Task) -> SubjectAnswer:
    """Parse the last code fence holding orderable=[...] / not_orderable=[...].

    Empty lists claim unsatisfiability. Items on both lists make the answer
    unparseable; items outside the puzzle are dropped with a warning.
    """
    block = None
    for candidate in _FENCE_RE.findall(text):
        if re.search(r"\borderable\s*=", candidate) and "not_orderable" in candidate:
            block = candidate
    if block is None:
        return SubjectAnswer(task, ClaimKind.UNPARSEABLE, text, reason="no answer block")
    m_ord = re.search(r"\borderable\s*=\s*\[([^\]]*)\]", block)
    m_not = re.search(r"\bnot_orderable\s*=\s*\[([^\]]*)\]", block)
    if not m_ord or not m_not:
        return SubjectAnswer(task, ClaimKind.UNPARSEABLE, text, reason="malformed lists")
    orderable = _split_items(m_ord.group(1))
    not_orderable = _split_items(m_not.group(1))
    if not orderable and not not_orderable:
        return SubjectAnswer(task, ClaimKind.UNSAT_CLAIM, text)
    overlap = set(orderable) & set(not_orderable)
    if overlap:
        return SubjectAnswer(
            task, ClaimKind.UNPARSEABLE, text,
            reason=f"items on both lists: {sorted(overlap)}",
        )
    item_to_var = puzzle.item_to_var
    warnings = []
    assignment: dict[int, bool] = {}
    for item in orderable:
        var = item_to_var.get(item)
        if var is None:
            warnings.append(f"unknown item {item!r}")
        else:
            assignment[var] = True
    for item in not_orderable:
        var = item_to_var.get(item)
        if var is None:
            warnings.append(f"unknown item {item!r}")
        else:
            assignment[var] = False
    return SubjectAnswer(
        task, ClaimKind.SAT_WITH, text, assignment=assignment,
        orderable=tuple(orderable), not_orderable=tuple(not_orderable),
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# SAT-CNF

def cnf_user_block(formula: Formula) -> str:
    clause_list = [list(c) for c in formula.clauses]
    return "Formula: " + repr(clause_list)


def encode_cnf_prompt(formula: Formula) -> str:
    return system_text(PromptEncoding.CNF) + "\n\n" + cnf_user_block(formula)


_OUTPUT_RE = re.compile(r"output\s*[:=]\s*\{(.*?)\}", re.S | re.I)
_PAIR_RE = re.compile(r"['\"]?(-?\d+)['\"]?\s*:\s*(True|False|true|false)")


def decode_cnf_answer(text: str, formula: Formula, task: Task) -> SubjectAnswer:
    """Parse the last ``output: {...}`` integer-to-boolean mapping.

    An empty mapping claims unsatisfiability; partial mappings are kept and
    judged by evaluation later.
    """
    matches = _OUTPUT_RE.findall(text)
    if not matches:
        return SubjectAnswer(task, ClaimKind.UNPARSEABLE, text, reason="no output marker")
    content = matches[-1]
    if not content.strip():
        return SubjectAnswer(task, ClaimKind.UNSAT_CLAIM, text)
    pairs = _PAIR_RE.findall(content)
    if not pairs:
        return SubjectAnswer(task, ClaimKind.UNPARSEABLE, text, reason="malformed mapping")
    assignment: dict[int, bool] = {}
    warnings = []
    for var_text, value_text in pairs:
        var = int(var_text)
        if var < 1 or var > formula.n:
            warnings.append(f"variable {var} outside [1, {formula.n}]")
            continue
        assignment[var] = value_text.lower() == "true"
    return SubjectAnswer(
        task, ClaimKind.SAT_WITH, text, assignment=assignment,
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# SAT-Translate

def encode_translate_prompt(puzzle: MenuPuzzle) -> str:
    return system_text(PromptEncoding.TRANSLATE) + "\n\n" + menu_user_block(puzzle)


def render_cnf_latex(puzzle: MenuPuzzle) -> str:
    """A faithful LaTeX rendering of the puzzle's formula over item names;
    serves as the reference translation in the translate pipeline."""
    clause_texts = []
    for clause in puzzle.formula.clauses:
        lits = [
            (r"\neg " if lit < 0 else "") + r"\text{" + puzzle.var_to_item[abs(lit)] + "}"
            for lit in clause
        ]
        clause_texts.append("(" + r" \lor ".join(lits) + ")")
    return r" \land ".join(clause_texts)


_NEGATION_RE = re.compile(r"^(\\neg|\\lnot|¬|~|!|NOT|not)\s*", re.I)
_ITEM_RE = re.compile(r"^[A-Za-z][\w-]*$")


def decode_translate_cnf(text: str, puzzle: MenuPuzzle) -> Formula:
    """Parse a conjunction of disjunctions over item names back to a formula.

    Tolerates LaTeX markup (math delimiters, \\text wrappers, alignment
    marks); unknown items or non-CNF structure raise TranslateParseError.
    """
    cleaned = text
    cleaned = re.sub(r"\\text\s*\{([^}]*)\}", r"\1", cleaned)
    cleaned = re.sub(r"\\(?:begin|end)\s*\{[^}]*\}", " ", cleaned)
    cleaned = cleaned.replace("$", " ").replace(r"\[", " ").replace(r"\]", " ")
    cleaned = cleaned.replace("&", " ").replace("\\\\", " ")
    cleaned = re.sub(r"\s+", " ", cleaned).strip()
    if not cleaned:
        raise TranslateParseError("empty translation")
    conjuncts = re.split(r"\\land|\\wedge|∧|\bAND\b", cleaned)
    item_to_var = puzzle.item_to_var
    clauses = []
    unknown: list[str] = []
    for conjunct in conjuncts:
        part = conjunct.strip()
        while part.startswith("(") and part.endswith(")"):
            part = part[1:-1].strip()
        if not part:
            raise TranslateParseError("empty clause in conjunction")
        lits = []
        for raw_lit in re.split(r"\\lor|\\vee|∨|\bOR\b|\|", part):
            token = raw_lit.strip().strip("()").strip()
            if not token:
                raise TranslateParseError(f"empty literal in clause {part!r}")
            negated = False
            m = _NEGATION_RE.match(token)
            if m:
                negated = True
                token = token[m.end():].strip()
            if not _ITEM_RE.match(token):
                raise TranslateParseError(f"not a CNF literal: {token!r}")
            var = item_to_var.get(token)
            if var is None:
                unknown.append(token)
                continue
            lits.append(-var if negated else var)
        if not unknown and not lits:
            raise TranslateParseError(f"clause {part!r} has no literals")
        clauses.append(lits)
    if unknown:
        raise TranslateParseError(
            f"unknown items: {sorted(set(unknown))}", unknown_items=sorted(set(unknown))
        )
    return Formula(puzzle.formula.n, clauses)


# ---------------------------------------------------------------------------
# few-shot assembly and example banks

@dataclass(frozen=True)
class BankEntry:
    instance_id: str
    problem_text: str
    solution_text: str


@dataclass
class ExampleBank:
    entries: list[BankEntry] = field(default_factory=list)

    def dump_jsonl(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for e in self.entries:
                fh.write(json.dumps({
                    "instance": e.instance_id,
                    "problem": e.problem_text,
                    "worked_solution": e.solution_text,
                }) + "\n")

    @classmethod
    def load_jsonl(cls, path: str) -> "ExampleBank":
        entries = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    entries.append(BankEntry(
                        obj["instance"], obj["problem"], obj["worked_solution"]
                    ))
        return cls(entries)


def assemble_fewshot(
    task: Task,
    encoding: PromptEncoding,
    shots: int,
    bank: ExampleBank | None,
    seed: int,
    target_problem: str,
    target_id: str,
) -> list[dict]:
    """System message, ``shots`` worked (problem, solution) pairs drawn
    without replacement and never equal to the target, then the target."""
    messages = [{"role": "system", "content": system_text(encoding)}]
    if shots:
        if bank is None:
            raise EncodingError("few-shot prompting requires an example bank")
        candidates = [e for e in bank.entries if e.instance_id != target_id]
        if len(candidates) < shots:
            raise EncodingError(
                f"example bank holds {len(candidates)} usable entries, need {shots}"
            )
        rng = random.Random(seed)
        index = list(range(len(candidates)))
        for j in range(shots):
            t = rng.randrange(j, len(index))
            index[j], index[t] = index[t], index[j]
        for j in index[:shots]:
            entry = candidates[j]
            messages.append({"role": "user", "content": entry.problem_text})
            messages.append({"role": "assistant", "content": entry.solution_text})
    messages.append({"role": "user", "content": target_problem})
    return messages
