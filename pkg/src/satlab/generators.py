"""Seeded random instance generation across the per-n alpha grids.

Families: random k-SAT (k = 2, 3) in the sampled-with-replacement model
(each clause draws k distinct variables, each negated with probability 1/2,
clauses independent), and 1-3 Horn formulas built from floor(n/2) positive
unit facts, one negated goal unit, and alpha*n definite width-3 clauses.

All randomness flows through per-instance seeds derived by hashing
(master seed, family, n, alpha, index), so pools are reproducible
instance-by-instance and may be built in parallel.
"""

from __future__ import annotations

import enum
import gzip
import hashlib
import io
import json
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .cnf import Formula, emit_dimacs
from .counter import CountMethod, count_models
from .errors import InvalidSpecError
from .solver import SolveOptions, SolveStats, Verdict, solve

ALPHA_C_3SAT = Fraction(4267, 1000)
ALPHA_C_2SAT = Fraction(1)
# The Horn construction has no sharp 0.5 crossing (P(SAT) starts near 0.5 at
# alpha=0 because the goal may collide with a fact, then decays); 2 marks the
# knee where P(SAT) has halved at n <= 10. Region tagging treats it as a
# default that callers can override.
ALPHA_C_HORN_DEFAULT = Fraction(2)


class Family(enum.Enum):
    KSAT2 = "2sat"
    KSAT3 = "3sat"
    HORN13 = "horn13"

    def __str__(self) -> str:
        return self.value


# finest per-n increment used on the dense part of the published grids
_FINE_INC = {
    3: Fraction(1), 4: Fraction(1, 4), 5: Fraction(1, 5), 6: Fraction(1, 2),
    7: Fraction(1), 8: Fraction(1, 8), 9: Fraction(1), 10: Fraction(1, 10),
}
_FALLBACK_INC = Fraction(1, 2)


def _dense_range(lo: Fraction, hi: Fraction, inc: Fraction) -> list[Fraction]:
    out = []
    a = lo
    while a <= hi:
        out.append(a)
        a += inc
    return out


def alpha_grid(n: int, family: Family) -> list[Fraction]:
    """The published alpha grid for one (n, family) cell.

    3-SAT: dense steps on [1, 6] at the finest increment keeping m integral,
    then integers up to 11. 2-SAT: the dense increment across all of [1, 10]
    (the range is cut early because unsatisfiability sets in sooner). Horn:
    integers 0..12. For n outside [3, 10] a uniform half-step fallback grid
    is used.
    """
    if family is Family.HORN13:
        return [Fraction(a) for a in range(0, 13)]
    inc = _FINE_INC.get(n, _FALLBACK_INC)
    if family is Family.KSAT2:
        return _dense_range(Fraction(1), Fraction(10), inc)
    if family is Family.KSAT3:
        return _dense_range(Fraction(1), Fraction(6), inc) + [
            Fraction(a) for a in range(7, 12)
        ]
    raise InvalidSpecError(f"unknown family {family!r}")


def dataset_alpha_grid(n: int, family: Family) -> list[Fraction]:
    """The alpha grid actually used when building pools.

    For 3-SAT this drops alpha = 1.0 from the published table: the reported
    per-n pool sizes are each one batch short of the full table, the pool's
    minimum alpha is 1.1, and only this variant reproduces the stated mean
    alpha of 4.7 exactly.
    """
    grid = alpha_grid(n, family)
    if family is Family.KSAT3:
        return [a for a in grid if a != 1]
    return grid


def format_alpha(alpha: Fraction) -> str:
    """Canonical decimal string for an alpha value ('2', '2.2', '1.125')."""
    if alpha.denominator == 1:
        return str(alpha.numerator)
    for e in range(1, 13):
        scaled = alpha * 10**e
        if scaled.denominator == 1:
            digits = str(abs(scaled.numerator)).rjust(e + 1, "0")
            sign = "-" if alpha < 0 else ""
            return f"{sign}{digits[:-e]}.{digits[-e:]}".rstrip("0").rstrip(".")
    return f"{alpha.numerator}/{alpha.denominator}"


def parse_alpha(text: str) -> Fraction:
    return Fraction(text)


def derive_seed(master: int, family: Family, n: int, alpha: Fraction, index: int) -> int:
    """Counter-mode seed split; stable across platforms and sessions."""
    key = f"{master}|{family.value}|{n}|{format_alpha(alpha)}|{index}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")


def _sample_distinct(rng: random.Random, pool: list[int], k: int) -> list[int]:
    # partial Fisher-Yates; explicit so results never depend on stdlib
    # sampling internals changing between versions
    for j in range(k):
        t = rng.randrange(j, len(pool))
        pool[j], pool[t] = pool[t], pool[j]
    return pool[:k]


def gen_ksat(n: int, m: int, k: int, seed: int) -> Formula:
    """m clauses of k distinct variables each, signs fair coins, clauses
    drawn independently (duplicates across clauses are kept)."""
    if k < 1 or k > n:
        raise InvalidSpecError(f"need 1 <= k <= n, got k={k}, n={n}")
    if m < 1:
        raise InvalidSpecError(f"need m >= 1, got m={m}")
    rng = random.Random(seed)
    pool = list(range(1, n + 1))
    clauses = []
    for _ in range(m):
        chosen = _sample_distinct(rng, pool, k)
        clauses.append([-v if rng.getrandbits(1) else v for v in chosen])
    return Formula(n, clauses)


def gen_horn13(n: int, alpha: Fraction, seed: int) -> Formula:
    """1-3 Horn formula: floor(n/2) positive facts, one negated goal unit,
    and alpha*n definite clauses (~x | ~y | z) over distinct variables."""
    alpha = Fraction(alpha)
    if n < 3:
        raise InvalidSpecError(f"horn13 needs n >= 3, got {n}")
    body_count = alpha * n
    if body_count.denominator != 1 or body_count < 0:
        raise InvalidSpecError(f"alpha*n must be a nonnegative integer, got {body_count}")
    rng = random.Random(seed)
    pool = list(range(1, n + 1))
    facts = sorted(_sample_distinct(rng, pool, n // 2))
    clauses: list[list[int]] = [[v] for v in facts]
    clauses.append([-rng.randrange(1, n + 1)])
    for _ in range(int(body_count)):
        x, y, z = _sample_distinct(rng, pool, 3)
        head = rng.randrange(3)
        clause = [-x, -y, -z]
        clause[head] = -clause[head]
        clauses.append(clause)
    return Formula(n, clauses)


def ksat_m(n: int, alpha: Fraction) -> int:
    """Clause count for a k-SAT cell: round(alpha*n), ties to even."""
    m = round(Fraction(alpha) * n)
    if m < 1:
        raise InvalidSpecError(f"alpha={alpha} gives m={m} < 1 at n={n}")
    return m


@dataclass(frozen=True)
class GenSpec:
    family: Family
    n: int
    alpha: Fraction
    seed: int  # master seed; per-instance seeds are derived from it
    count: int

    def instance_seed(self, index: int) -> int:
        return derive_seed(self.seed, self.family, self.n, self.alpha, index)


@dataclass(frozen=True)
class InstanceRecord:
    id: str
    formula: Formula
    family: Family
    k: int | None
    n: int
    m: int
    alpha: Fraction
    seed: int  # per-instance derived seed; regenerates the formula
    label: str | None = None
    model_count: int | None = None
    region: str = "UNKNOWN"

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "family": self.family.value,
            "k": self.k,
            "n": self.n,
            "m": self.m,
            "alpha": format_alpha(self.alpha),
            "seed": self.seed,
            "label": self.label,
            "region": self.region,
            "clauses": [list(c) for c in self.formula.clauses],
        }
        if self.model_count is not None:
            out["model_count"] = self.model_count
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "InstanceRecord":
        return cls(
            id=obj["id"],
            formula=Formula(obj["n"], obj["clauses"]),
            family=Family(obj["family"]),
            k=obj.get("k"),
            n=obj["n"],
            m=obj["m"],
            alpha=parse_alpha(obj["alpha"]),
            seed=obj["seed"],
            label=obj.get("label"),
            model_count=obj.get("model_count"),
            region=obj.get("region", "UNKNOWN"),
        )

    def to_dimacs(self) -> str:
        prov = f"seed={self.seed}"
        if self.k is not None:
            prov += f" k={self.k}"
        prov += f" alpha={format_alpha(self.alpha)}"
        return emit_dimacs(self.formula, comments=[prov])


def generate_instance(spec: GenSpec, index: int) -> InstanceRecord:
    iseed = spec.instance_seed(index)
    if spec.family is Family.HORN13:
        formula = gen_horn13(spec.n, spec.alpha, iseed)
        k = None
    else:
        k = 2 if spec.family is Family.KSAT2 else 3
        formula = gen_ksat(spec.n, ksat_m(spec.n, spec.alpha), k, iseed)
    ident = (
        f"{spec.family.value}-n{spec.n}-a{format_alpha(spec.alpha)}"
        f"-s{spec.seed}-{index}"
    )
    return InstanceRecord(
        id=ident, formula=formula, family=spec.family, k=k, n=spec.n,
        m=formula.m, alpha=Fraction(spec.alpha), seed=iseed,
    )


@dataclass
class PoolBuild:
    records: list[InstanceRecord]
    label_stats: dict[str, SolveStats]


def _build_one_spec(args: tuple) -> tuple[list[InstanceRecord], dict[str, SolveStats]]:
    spec, counting_cap_n, solve_options = args
    records = []
    stats = {}
    for i in range(spec.count):
        rec = generate_instance(spec, i)
        outcome = solve(rec.formula, options=solve_options)
        if outcome.verdict is Verdict.LIMIT_EXCEEDED:
            raise InvalidSpecError(f"labeling budget exceeded on {rec.id}")
        label = outcome.verdict.value
        model_count = None
        if rec.n <= counting_cap_n:
            model_count = count_models(rec.formula, CountMethod.ENUM).model_count
            if (model_count > 0) != (label == "SAT"):
                raise AssertionError(
                    f"solver/counter disagree on {rec.id}: {label} vs {model_count}"
                )
        records.append(replace(rec, label=label, model_count=model_count))
        stats[rec.id] = outcome.stats
    return records, stats


def build_pool(
    specs: Iterable[GenSpec],
    counting_cap_n: int = 20,
    jobs: int = 1,
    solve_options: SolveOptions | None = None,
    horn_alpha_c: Fraction = ALPHA_C_HORN_DEFAULT,
) -> PoolBuild:
    """Generate, label, count, and region-tag a pool of instances.

    Every instance is labeled by the DPLL solver; exact model counts are
    filled for n <= counting_cap_n and cross-checked against the label.
    Records come back ordered by (family, n, alpha, index) regardless of
    worker scheduling.
    """
    spec_list = sorted(
        specs, key=lambda s: (s.family.value, s.n, s.alpha, s.seed, s.count)
    )
    opts = solve_options or SolveOptions()
    work = [(s, counting_cap_n, opts) for s in spec_list]
    records: list[InstanceRecord] = []
    label_stats: dict[str, SolveStats] = {}
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for recs, stats in pool.map(_build_one_spec, work):
                records.extend(recs)
                label_stats.update(stats)
    else:
        for item in work:
            recs, stats = _build_one_spec(item)
            records.extend(recs)
            label_stats.update(stats)
    return PoolBuild(assign_regions(records, horn_alpha_c), label_stats)


def _alpha_c(family: Family, horn_alpha_c: Fraction) -> Fraction:
    if family is Family.KSAT3:
        return ALPHA_C_3SAT
    if family is Family.KSAT2:
        return ALPHA_C_2SAT
    return horn_alpha_c


def assign_regions(
    records: Sequence[InstanceRecord],
    horn_alpha_c: Fraction = ALPHA_C_HORN_DEFAULT,
) -> list[InstanceRecord]:
    """Empirical region tags per (family, n, alpha) group: uniformly SAT
    below/above the critical density is EASY_UNDER/EASY_OVER, uniformly
    UNSAT is EASY_OVER, mixed labels mean the group straddles the
    transition and is HARD. Unlabeled groups stay UNKNOWN."""
    groups: dict[tuple, list[InstanceRecord]] = {}
    for rec in records:
        groups.setdefault((rec.family, rec.n, rec.alpha), []).append(rec)
    region_of: dict[tuple, str] = {}
    for key, group in groups.items():
        family, _, alpha = key
        labels = {r.label for r in group}
        if None in labels or not labels:
            region_of[key] = "UNKNOWN"
        elif labels == {"SAT"}:
            region_of[key] = (
                "EASY_UNDER" if alpha < _alpha_c(family, horn_alpha_c) else "EASY_OVER"
            )
        elif labels == {"UNSAT"}:
            region_of[key] = "EASY_OVER"
        else:
            region_of[key] = "HARD"
    return [
        replace(rec, region=region_of[(rec.family, rec.n, rec.alpha)])
        for rec in records
    ]


def paper_pool_specs(
    family: Family,
    n_values: Iterable[int],
    per_alpha: int,
    master_seed: int,
    grid: str = "dataset",
) -> list[GenSpec]:
    """One GenSpec per (n, alpha) cell of the published grids."""
    grid_fn = dataset_alpha_grid if grid == "dataset" else alpha_grid
    return [
        GenSpec(family, n, alpha, master_seed, per_alpha)
        for n in n_values
        for alpha in grid_fn(n, family)
    ]


# ---------------------------------------------------------------------------
# pool persistence (JSON lines; .gz transparently)

def write_pool(records: Sequence[InstanceRecord], path: str) -> None:
    payload = "".join(
        json.dumps(rec.to_json(), separators=(",", ":")) + "\n" for rec in records
    ).encode()
    if str(path).endswith(".gz"):
        buf = io.BytesIO()
        # fixed mtime so identical pools are byte-identical on disk
        with gzip.GzipFile(filename="", mode="wb", fileobj=buf, mtime=0) as zf:
            zf.write(payload)
        payload = buf.getvalue()
    with open(path, "wb") as fh:
        fh.write(payload)


def read_pool(path: str) -> list[InstanceRecord]:
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rt", encoding="utf-8") as fh:
        return [InstanceRecord.from_json(json.loads(line)) for line in fh if line.strip()]


def pool_digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


# ---------------------------------------------------------------------------
# generation-time characterization (phase-transition statistics)

@dataclass(frozen=True)
class PhaseRow:
    family: str
    n: int
    alpha: Fraction
    samples: int
    sat: int
    p_sat: float
    median_decisions: float

    @property
    def alpha_str(self) -> str:
        return format_alpha(self.alpha)


def phase_rows(build: PoolBuild) -> list[PhaseRow]:
    """Per (family, n, alpha) satisfiable fraction and median decisions."""
    groups: dict[tuple, list[InstanceRecord]] = {}
    for rec in build.records:
        groups.setdefault((rec.family.value, rec.n, rec.alpha), []).append(rec)
    rows = []
    for (family, n, alpha), group in sorted(groups.items()):
        sat = sum(1 for r in group if r.label == "SAT")
        decisions = [build.label_stats[r.id].decisions for r in group
                     if r.id in build.label_stats]
        rows.append(PhaseRow(
            family=family, n=n, alpha=alpha, samples=len(group), sat=sat,
            p_sat=sat / len(group),
            median_decisions=statistics.median(decisions) if decisions else 0.0,
        ))
    return rows


def psat_crossing(rows: Sequence[PhaseRow]) -> float | None:
    """Alpha where P(SAT) first crosses 0.5, linearly interpolated between
    adjacent grid points; None if the curve never crosses."""
    pts = sorted((float(r.alpha), r.p_sat) for r in rows)
    for (a1, p1), (a2, p2) in zip(pts, pts[1:]):
        if p1 >= 0.5 >= p2 and p1 != p2:
            return a1 + (p1 - 0.5) * (a2 - a1) / (p1 - p2)
    return None
