"""Experiment orchestration: run a subject over a pool, verify every answer,
and aggregate accuracy curves, confusion matrices, and token statistics.

Scoring is strict: an unparseable answer is incorrect, never excluded
(excluding it would inflate accuracy exactly where subjects fail most). A
search claim is correct only if the claimed assignment satisfies the source
formula under evaluation, or the claim is UNSAT and the stored label agrees.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .cnf import EvalStatus, evaluate
from .counter import satisfiability_ratio
from .encodings import (
    ClaimKind,
    ExampleBank,
    PromptEncoding,
    SubjectAnswer,
    Task,
    assemble_fewshot,
    build_menu_puzzle,
    cnf_user_block,
    decode_cnf_answer,
    decode_menu_answer,
    decode_translate_cnf,
    menu_user_block,
    template_versions,
)
from .errors import ConfigError, SatlabError, TranslateParseError
from .generators import InstanceRecord, format_alpha
from .solver import SolveMode, Verdict, solve
from .subjects import EncodedInstance, Subject, SubjectReply
from .client import Usage, approx_tokens

import hashlib


@dataclass
class ExperimentConfig:
    task: Task
    encoding: PromptEncoding
    shots: int = 0
    subject_spec: str = "oracle"
    master_seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.shots not in (0, 3):
            raise ConfigError(f"shots must be 0 or 3, got {self.shots}")
        if self.encoding is PromptEncoding.TRANSLATE and self.task is not Task.SEARCH:
            raise ConfigError("the translate pipeline solves the decoded formula; "
                              "it is a search configuration")


@dataclass
class EvalRecord:
    instance_id: str
    task: str
    encoding: str
    shots: int
    subject: str
    correct: bool
    cell: str | None  # TP/FP/TN/FN for decision tasks (positive class = SAT)
    claim_kind: str
    input_tokens: int | None
    output_tokens: int | None
    tokens_approximate: bool
    latency_ms: float
    warnings: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "id": self.instance_id,
            "task": self.task,
            "encoding": self.encoding,
            "shots": self.shots,
            "subject": self.subject,
            "correct": self.correct,
            "cell": self.cell,
            "claim_kind": self.claim_kind,
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "tokens_approximate": self.tokens_approximate,
            "latency_ms": self.latency_ms,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvalRecord":
        return cls(
            instance_id=obj["id"], task=obj["task"], encoding=obj["encoding"],
            shots=obj["shots"], subject=obj["subject"], correct=obj["correct"],
            cell=obj.get("cell"), claim_kind=obj["claim_kind"],
            input_tokens=obj.get("input_tokens"),
            output_tokens=obj.get("output_tokens"),
            tokens_approximate=obj.get("tokens_approximate", False),
            latency_ms=obj.get("latency_ms", 0.0),
        )


def _encode_seed(master_seed: int, instance_id: str) -> int:
    digest = hashlib.sha256(f"{master_seed}|{instance_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def encode_instance(
    record: InstanceRecord,
    config: ExperimentConfig,
    bank: ExampleBank | None = None,
) -> EncodedInstance:
    seed = _encode_seed(config.master_seed, record.id)
    puzzle = None
    if config.encoding in (PromptEncoding.MENU, PromptEncoding.TRANSLATE):
        puzzle = build_menu_puzzle(record.formula, seed=seed)
        problem = menu_user_block(puzzle)
    else:
        problem = cnf_user_block(record.formula)
    messages = assemble_fewshot(
        config.task, config.encoding, config.shots, bank, seed, problem, record.id
    )
    return EncodedInstance(
        record=record, task=config.task, encoding=config.encoding,
        shots=config.shots, puzzle=puzzle, messages=messages,
    )


def decode_reply(enc: EncodedInstance, text: str) -> SubjectAnswer:
    """Turn raw subject output into a claim; for the translate encoding the
    decoded formula is handed to the in-repo solver to finish the job."""
    if enc.encoding is PromptEncoding.MENU:
        return decode_menu_answer(text, enc.puzzle, enc.task)
    if enc.encoding is PromptEncoding.CNF:
        return decode_cnf_answer(text, enc.record.formula, enc.task)
    try:
        translated = decode_translate_cnf(text, enc.puzzle)
    except TranslateParseError as err:
        return SubjectAnswer(enc.task, ClaimKind.UNPARSEABLE, text, reason=str(err))
    outcome = solve(translated, SolveMode.SEARCH)
    if outcome.verdict is Verdict.SAT:
        return SubjectAnswer(enc.task, ClaimKind.SAT_WITH, text,
                             assignment=outcome.assignment)
    return SubjectAnswer(enc.task, ClaimKind.UNSAT_CLAIM, text)


def verify_answer(record: InstanceRecord, answer: SubjectAnswer,
                  extra: dict | None = None) -> EvalRecord:
    """Judge one answer against the instance's formula and stored label."""
    truth_sat = record.label == "SAT"
    task = answer.task
    if task is Task.DECISION:
        if answer.kind is ClaimKind.SAT_WITH:
            predicted_sat = True
        elif answer.kind is ClaimKind.UNSAT_CLAIM:
            predicted_sat = False
        else:  # unparseable counts as the wrong prediction for its column
            predicted_sat = not truth_sat
        correct = predicted_sat == truth_sat
        cell = {
            (True, True): "TP", (True, False): "FN",
            (False, True): "FP", (False, False): "TN",
        }[(truth_sat, predicted_sat)]
    else:
        cell = None
        if answer.kind is ClaimKind.SAT_WITH:
            result = evaluate(record.formula, answer.assignment or {})
            correct = result.status is EvalStatus.SATISFIED
        elif answer.kind is ClaimKind.UNSAT_CLAIM:
            correct = not truth_sat
        else:
            correct = False
    extra = extra or {}
    usage = answer.token_usage or {}
    return EvalRecord(
        instance_id=record.id,
        task=task.value,
        encoding=extra.get("encoding", ""),
        shots=extra.get("shots", 0),
        subject=extra.get("subject", ""),
        correct=correct,
        cell=cell,
        claim_kind=answer.kind.value,
        input_tokens=usage.get("input_tokens"),
        output_tokens=usage.get("output_tokens"),
        tokens_approximate=usage.get("approximate", False),
        latency_ms=extra.get("latency_ms", 0.0),
        warnings=answer.warnings,
    )


def run_experiment(
    records: list[InstanceRecord],
    config: ExperimentConfig,
    subject: Subject,
    bank: ExampleBank | None = None,
    pool_digest: str | None = None,
) -> tuple[list[EvalRecord], dict]:
    """One EvalRecord per instance; transport failures score as unparseable
    and the run continues. Output is ordered by instance id regardless of
    scheduling, and cached completions make interrupted runs resumable."""

    def eval_one(record: InstanceRecord) -> EvalRecord:
        enc = encode_instance(record, config, bank)
        try:
            reply = subject.answer(enc)
        except SatlabError as err:
            answer = SubjectAnswer(config.task, ClaimKind.UNPARSEABLE, "",
                                   reason=f"transport: {err}")
            reply = SubjectReply("")
        else:
            answer = decode_reply(enc, reply.text)
        usage = reply.usage
        if usage is None:
            usage = Usage(
                approx_tokens("".join(m["content"] for m in enc.messages)),
                approx_tokens(reply.text),
                approximate=True,
            )
        answer.token_usage = usage.to_json()
        return verify_answer(record, answer, extra={
            "encoding": config.encoding.value,
            "shots": config.shots,
            "subject": subject.name,
            "latency_ms": reply.latency_s * 1000.0,
        })

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(eval_one, records))
    else:
        results = [eval_one(r) for r in records]
    results.sort(key=lambda r: r.instance_id)
    manifest = {
        "task": config.task.value,
        "encoding": config.encoding.value,
        "shots": config.shots,
        "subject": subject.name,
        "master_seed": config.master_seed,
        "instances": len(results),
        "accuracy": overall_accuracy(results) if results else None,
        "template_versions": template_versions(),
        "pool_digest": pool_digest,
        "timestamp": time.time(),
    }
    return results, manifest


def overall_accuracy(records: list[EvalRecord]) -> float:
    return sum(r.correct for r in records) / len(records)


def make_example_bank(records: list[InstanceRecord], config: ExperimentConfig,
                      limit: int = 24) -> ExampleBank:
    """Worked examples for few-shot prompts: problem texts rendered exactly
    as encode_instance would, solutions rendered by the oracle subject."""
    from .encodings import BankEntry
    from .subjects import OracleSubject

    oracle = OracleSubject()
    zero_shot = ExperimentConfig(
        task=config.task, encoding=config.encoding, shots=0,
        subject_spec="oracle", master_seed=config.master_seed,
    )
    entries = []
    for record in records[:limit]:
        enc = encode_instance(record, zero_shot)
        entries.append(BankEntry(
            instance_id=record.id,
            problem_text=enc.messages[-1]["content"],
            solution_text=oracle.answer(enc).text,
        ))
    return ExampleBank(entries)


# ---------------------------------------------------------------------------
# aggregation

@dataclass(frozen=True)
class CurvePoint:
    alpha_center: float
    window_lo: float
    window_hi: float
    samples: int
    accuracy: float
    region: str | None = None


def _join(records: list[EvalRecord], pool: list[InstanceRecord]) -> list[tuple]:
    by_id = {p.id: p for p in pool}
    joined = [(by_id[r.instance_id], r) for r in records if r.instance_id in by_id]
    if not joined:
        raise ConfigError("no eval records join to the pool")
    return joined


def accuracy_vs_alpha(records: list[EvalRecord], pool: list[InstanceRecord],
                      window: int = 4) -> list[CurvePoint]:
    """Moving window over distinct alpha values: each run of ``window``
    consecutive alphas yields one point at their mean, pooled across n."""
    joined = _join(records, pool)
    per_alpha: dict[Fraction, list[bool]] = {}
    for inst, rec in joined:
        per_alpha.setdefault(inst.alpha, []).append(rec.correct)
    alphas = sorted(per_alpha)
    points = []
    for i in range(0, max(0, len(alphas) - window + 1)):
        group = alphas[i:i + window]
        outcomes = [ok for a in group for ok in per_alpha[a]]
        points.append(CurvePoint(
            alpha_center=float(sum(group) / len(group)),
            window_lo=float(group[0]),
            window_hi=float(group[-1]),
            samples=len(outcomes),
            accuracy=sum(outcomes) / len(outcomes),
        ))
    return points


@dataclass(frozen=True)
class RatioPoint:
    ratio_lo: float
    ratio_hi: float
    region: str
    samples: int
    accuracy: float


def accuracy_vs_sat_ratio(records: list[EvalRecord], pool: list[InstanceRecord],
                          bins: int = 10) -> list[RatioPoint]:
    """Accuracy bucketed by model-count ratio, split hard vs easy regions.

    Only satisfiable instances with a model count participate.
    """
    joined = [
        (inst, rec) for inst, rec in _join(records, pool)
        if inst.label == "SAT" and inst.model_count is not None
    ]
    if not joined:
        raise ConfigError("no counted satisfiable instances to bucket")
    edges = [Fraction(i, bins) for i in range(bins + 1)]
    buckets: dict[tuple[int, str], list[bool]] = {}
    for inst, rec in joined:
        assert inst.model_count > 0, "SAT label with zero model count"
        ratio = satisfiability_ratio(inst)
        idx = min(int(ratio * bins), bins - 1)
        region = "HARD" if inst.region == "HARD" else "EASY"
        buckets.setdefault((idx, region), []).append(rec.correct)
    return [
        RatioPoint(
            ratio_lo=float(edges[idx]), ratio_hi=float(edges[idx + 1]),
            region=region, samples=len(oks), accuracy=sum(oks) / len(oks),
        )
        for (idx, region), oks in sorted(buckets.items())
    ]


@dataclass(frozen=True)
class ConfusionMatrix:
    """Column-normalized 2x2 matrix; columns are true labels, rows predicted,
    positive class SAT. Cells are None when a column has no instances."""

    pred_sat_given_sat: float | None
    pred_unsat_given_sat: float | None
    pred_sat_given_unsat: float | None
    pred_unsat_given_unsat: float | None
    sat_count: int
    unsat_count: int


def confusion_matrix(records: list[EvalRecord]) -> ConfusionMatrix:
    cells = {"TP": 0, "FN": 0, "FP": 0, "TN": 0}
    for rec in records:
        if rec.task != Task.DECISION.value or rec.cell is None:
            continue
        cells[rec.cell] += 1
    sat_total = cells["TP"] + cells["FN"]
    unsat_total = cells["FP"] + cells["TN"]
    return ConfusionMatrix(
        pred_sat_given_sat=cells["TP"] / sat_total if sat_total else None,
        pred_unsat_given_sat=cells["FN"] / sat_total if sat_total else None,
        pred_sat_given_unsat=cells["FP"] / unsat_total if unsat_total else None,
        pred_unsat_given_unsat=cells["TN"] / unsat_total if unsat_total else None,
        sat_count=sat_total,
        unsat_count=unsat_total,
    )


def _ranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(xs: list[float], ys: list[float]) -> float:
    """Rank correlation with average ranks for ties; 0.0 when either input
    is constant (no monotone trend measurable)."""
    if len(xs) < 2 or len(set(xs)) == 1 or len(set(ys)) == 1:
        return 0.0
    return statistics.correlation(_ranks(xs), _ranks(ys))


@dataclass(frozen=True)
class TokenCurvePoint:
    alpha: float
    samples: int
    median_output_tokens: float
    q1_output_tokens: float
    q3_output_tokens: float


@dataclass(frozen=True)
class TokenAnalysis:
    curve: tuple[TokenCurvePoint, ...]
    input_output_spearman: float
    any_approximate: bool


def token_analysis(records: list[EvalRecord], pool: list[InstanceRecord]) -> TokenAnalysis:
    joined = [(inst, rec) for inst, rec in _join(records, pool)
              if rec.output_tokens is not None]
    per_alpha: dict[Fraction, list[int]] = {}
    pairs = []
    any_approx = False
    for inst, rec in joined:
        per_alpha.setdefault(inst.alpha, []).append(rec.output_tokens)
        if rec.input_tokens is not None:
            pairs.append((rec.input_tokens, rec.output_tokens))
        any_approx = any_approx or rec.tokens_approximate
    curve = []
    for alpha in sorted(per_alpha):
        outs = sorted(per_alpha[alpha])
        q1, med, q3 = (statistics.quantiles(outs, n=4) if len(outs) >= 2
                       else (outs[0], outs[0], outs[0]))
        curve.append(TokenCurvePoint(
            alpha=float(alpha), samples=len(outs),
            median_output_tokens=med, q1_output_tokens=q1, q3_output_tokens=q3,
        ))
    rho = spearman([float(i) for i, _ in pairs], [float(o) for _, o in pairs])
    return TokenAnalysis(tuple(curve), rho, any_approx)


# ---------------------------------------------------------------------------
# export

@dataclass
class AnalysisBundle:
    alpha_curve: list[CurvePoint] = field(default_factory=list)
    ratio_curve: list[RatioPoint] = field(default_factory=list)
    confusion: ConfusionMatrix | None = None
    tokens: TokenAnalysis | None = None


def analyze_records(records: list[EvalRecord], pool: list[InstanceRecord],
                    window: int = 4, bins: int = 10) -> AnalysisBundle:
    bundle = AnalysisBundle()
    bundle.alpha_curve = accuracy_vs_alpha(records, pool, window)
    try:
        bundle.ratio_curve = accuracy_vs_sat_ratio(records, pool, bins)
    except ConfigError:
        bundle.ratio_curve = []
    if any(r.task == Task.DECISION.value for r in records):
        bundle.confusion = confusion_matrix(records)
    bundle.tokens = token_analysis(records, pool)
    return bundle


def _csv_bytes(header: list[str], rows: list[list]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode()


def export_results(records: list[EvalRecord], bundle: AnalysisBundle,
                   out_dir, manifest: dict | None = None) -> dict[str, str]:
    """Write results.jsonl, the curve CSVs, and manifest.json; identical
    inputs produce byte-identical files."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}

    results_path = out / "results.jsonl"
    payload = "".join(
        json.dumps(r.to_json(), sort_keys=True, separators=(",", ":")) + "\n"
        for r in records
    )
    results_path.write_bytes(payload.encode())
    paths["results"] = str(results_path)

    alpha_path = out / "accuracy_vs_alpha.csv"
    alpha_path.write_bytes(_csv_bytes(
        ["alpha_center", "window_lo", "window_hi", "samples", "accuracy"],
        [[p.alpha_center, p.window_lo, p.window_hi, p.samples, p.accuracy]
         for p in bundle.alpha_curve],
    ))
    paths["accuracy_vs_alpha"] = str(alpha_path)

    ratio_path = out / "accuracy_vs_ratio.csv"
    ratio_path.write_bytes(_csv_bytes(
        ["ratio_lo", "ratio_hi", "region", "samples", "accuracy"],
        [[p.ratio_lo, p.ratio_hi, p.region, p.samples, p.accuracy]
         for p in bundle.ratio_curve],
    ))
    paths["accuracy_vs_ratio"] = str(ratio_path)

    if bundle.confusion is not None:
        conf_path = out / "confusion.csv"
        c = bundle.confusion
        conf_path.write_bytes(_csv_bytes(
            ["true_label", "pred_sat", "pred_unsat", "samples"],
            [["SAT", c.pred_sat_given_sat, c.pred_unsat_given_sat, c.sat_count],
             ["UNSAT", c.pred_sat_given_unsat, c.pred_unsat_given_unsat, c.unsat_count]],
        ))
        paths["confusion"] = str(conf_path)

    if bundle.tokens is not None:
        tok_path = out / "tokens_vs_alpha.csv"
        tok_path.write_bytes(_csv_bytes(
            ["alpha", "samples", "median_output_tokens",
             "q1_output_tokens", "q3_output_tokens"],
            [[p.alpha, p.samples, p.median_output_tokens,
              p.q1_output_tokens, p.q3_output_tokens]
             for p in bundle.tokens.curve],
        ))
        paths["tokens_vs_alpha"] = str(tok_path)

    if manifest is not None:
        man_path = out / "manifest.json"
        man_path.write_bytes(
            json.dumps(manifest, sort_keys=True, indent=2).encode() + b"\n"
        )
        paths["manifest"] = str(man_path)
    return paths


def phase_csv_bytes(rows, crossing: float | None) -> bytes:
    """Generation-stats CSV: per (family, n, alpha) P(SAT) and median
    decisions, plus the interpolated 0.5 crossing repeated per row so plots
    can draw it without recomputation."""
    cross = "" if crossing is None else crossing
    return _csv_bytes(
        ["family", "n", "alpha", "samples", "sat", "p_sat",
         "median_decisions", "crossing_alpha"],
        [[r.family, r.n, format_alpha(r.alpha), r.samples, r.sat, r.p_sat,
          r.median_decisions, cross] for r in rows],
    )
