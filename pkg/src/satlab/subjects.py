"""Answer-producing subjects evaluated by the harness.

Three built-ins: ORACLE runs the in-repo solver and renders a correct
answer in the requested output format (for the translate encoding it
pretty-prints the CNF faithfully); RANDOM flips a coin between claiming
unsatisfiability and emitting a uniformly random total assignment; the LLM
subject forwards the prompt messages to a chat-completions endpoint through
the caching client. ORACLE and RANDOM never touch the network.
"""

from __future__ import annotations

import hashlib
import random
import time
from dataclasses import dataclass
from typing import Protocol

from .client import CompletionClient, ModelConfig, Usage
from .encodings import (
    MenuPuzzle,
    PromptEncoding,
    Task,
    render_cnf_latex,
)
from .errors import ConfigError
from .generators import InstanceRecord
from .solver import SolveMode, SolveOptions, Verdict, solve


@dataclass
class EncodedInstance:
    record: InstanceRecord
    task: Task
    encoding: PromptEncoding
    shots: int
    puzzle: MenuPuzzle | None  # set for menu and translate encodings
    messages: list[dict]


@dataclass
class SubjectReply:
    text: str
    usage: Usage | None = None
    latency_s: float = 0.0


class Subject(Protocol):
    name: str

    def answer(self, enc: EncodedInstance) -> SubjectReply: ...


def _render_menu_answer(puzzle: MenuPuzzle, assignment: dict[int, bool] | None) -> str:
    if assignment is None:
        body = "orderable=[]\nnot_orderable=[]"
    else:
        orderable = [puzzle.var_to_item[v] for v in sorted(assignment) if assignment[v]]
        not_orderable = [puzzle.var_to_item[v] for v in sorted(assignment) if not assignment[v]]
        body = (
            f"orderable=[{', '.join(orderable)}]\n"
            f"not_orderable=[{', '.join(not_orderable)}]"
        )
    return f"```python\n{body}\n```"


def _render_cnf_answer(assignment: dict[int, bool] | None) -> str:
    if assignment is None:
        return "```python\noutput: {}\n```"
    inner = ", ".join(f"{v}: {assignment[v]}" for v in sorted(assignment))
    return f"```python\noutput: {{{inner}}}\n```"


class OracleSubject:
    """Solves the instance exactly and answers in the requested format."""

    name = "oracle"

    def __init__(self, options: SolveOptions | None = None):
        self.options = options or SolveOptions()

    def answer(self, enc: EncodedInstance) -> SubjectReply:
        started = time.perf_counter()
        if enc.encoding is PromptEncoding.TRANSLATE:
            text = render_cnf_latex(enc.puzzle)
            return SubjectReply(text, latency_s=time.perf_counter() - started)
        outcome = solve(enc.record.formula, SolveMode.SEARCH, self.options)
        assignment = outcome.assignment if outcome.verdict is Verdict.SAT else None
        if enc.encoding is PromptEncoding.MENU:
            text = _render_menu_answer(enc.puzzle, assignment)
        else:
            text = _render_cnf_answer(assignment)
        return SubjectReply(text, latency_s=time.perf_counter() - started)


class RandomSubject:
    """Coin flip between an unsatisfiable claim and a uniform random total
    assignment, both rendered in the requested format. Seeded per instance,
    so runs are reproducible and schedule-independent."""

    name = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def _rng(self, instance_id: str) -> random.Random:
        digest = hashlib.sha256(f"{self.seed}|{instance_id}".encode()).digest()
        return random.Random(int.from_bytes(digest[:8], "big"))

    def answer(self, enc: EncodedInstance) -> SubjectReply:
        rng = self._rng(enc.record.id)
        claim_unsat = rng.getrandbits(1) == 1
        assignment = None
        if not claim_unsat:
            assignment = {
                v: bool(rng.getrandbits(1)) for v in range(1, enc.record.n + 1)
            }
        if enc.encoding is PromptEncoding.MENU:
            text = _render_menu_answer(enc.puzzle, assignment)
        elif enc.encoding is PromptEncoding.CNF:
            text = _render_cnf_answer(assignment)
        else:  # random noise is not a CNF translation; scored unparseable
            text = "no translation"
        return SubjectReply(text)


class LlmSubject:
    """Network subject speaking the chat-completions wire format."""

    def __init__(self, config: ModelConfig, cache_dir: str = "cache",
                 max_in_flight: int = 4, name: str | None = None):
        self.client = CompletionClient(config, cache_dir, max_in_flight)
        self.name = name or config.model_name

    def answer(self, enc: EncodedInstance) -> SubjectReply:
        record = self.client.complete(enc.messages)
        return SubjectReply(record.response_text, record.usage, record.latency_s)


def subject_adapter(spec: str, seed: int = 0, cache_dir: str = "cache") -> Subject:
    """Build a subject from a CLI-style spec: ``oracle``, ``random``, or
    ``llm:<config-path>``."""
    if spec == "oracle":
        return OracleSubject()
    if spec == "random":
        return RandomSubject(seed)
    if spec.startswith("llm:"):
        return LlmSubject(ModelConfig.from_file(spec[4:]), cache_dir=cache_dir)
    raise ConfigError(f"unknown subject spec {spec!r}")
