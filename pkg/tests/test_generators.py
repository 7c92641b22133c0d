import json
from fractions import Fraction

import pytest

from oracles import brute_force_sat
from satlab import Family, GenSpec, alpha_grid, build_pool, dataset_alpha_grid
from satlab.errors import InvalidSpecError
from satlab.generators import (
    assign_regions,
    derive_seed,
    format_alpha,
    gen_horn13,
    gen_ksat,
    generate_instance,
    ksat_m,
    paper_pool_specs,
    parse_alpha,
    phase_rows,
    psat_crossing,
    read_pool,
    write_pool,
)


class TestKsat:
    def test_alpha_2_2_at_n5_gives_11_triples(self):
        assert ksat_m(5, Fraction("2.2")) == 11
        f = gen_ksat(5, 11, 3, seed=0)
        assert f.m == 11
        assert all(len(c) == 3 for c in f.clauses)

    def test_k_equals_n_mentions_every_variable(self):
        for seed in range(20):
            f = gen_ksat(3, 1, 3, seed)
            assert {abs(l) for l in f.clauses[0]} == {1, 2, 3}

    def test_clause_variables_distinct(self):
        for seed in range(50):
            f = gen_ksat(10, 43, 3, seed)
            for c in f.clauses:
                assert len({abs(l) for l in c}) == len(c) == 3

    def test_invalid_specs(self):
        with pytest.raises(InvalidSpecError):
            gen_ksat(2, 5, 3, 0)
        with pytest.raises(InvalidSpecError):
            gen_ksat(3, 0, 3, 0)

    def test_deterministic_per_seed(self):
        assert gen_ksat(10, 43, 3, 42).clauses == gen_ksat(10, 43, 3, 42).clauses
        assert gen_ksat(10, 43, 3, 42).clauses != gen_ksat(10, 43, 3, 43).clauses

    def test_polarity_frequency_monte_carlo(self):
        # 10^4 draws at n=10, m=43: each variable's positive-literal share
        # sits within 0.5 +/- 0.02
        pos = [0] * 11
        tot = [0] * 11
        for i in range(10_000):
            for clause in gen_ksat(10, 43, 3, i).clauses:
                for lit in clause:
                    tot[abs(lit)] += 1
                    pos[abs(lit)] += lit > 0
        for v in range(1, 11):
            assert abs(pos[v] / tot[v] - 0.5) < 0.02


class TestHorn:
    def test_clause_count_formula(self):
        assert gen_horn13(10, Fraction(2), 1).m == 26  # 20 + 5 + 1
        assert gen_horn13(4, Fraction(0), 1).m == 3    # 2 facts + goal only

    def test_shape_and_horn_property(self):
        f = gen_horn13(8, Fraction(3), 7)
        for clause in f.clauses:
            assert len(clause) in (1, 3)
            assert sum(1 for l in clause if l > 0) <= 1

    def test_fractional_alpha_n_rejected(self):
        with pytest.raises(InvalidSpecError):
            gen_horn13(10, Fraction(1, 3), 0)
        with pytest.raises(InvalidSpecError):
            gen_horn13(2, Fraction(1), 0)

    def test_structure_details(self):
        f = gen_horn13(9, Fraction(2), 3)
        units = [c for c in f.clauses if len(c) == 1]
        assert len(units) == 4 + 1  # floor(9/2) facts + 1 goal
        assert sum(1 for (l,) in units if l < 0) == 1
        facts = [l for (l,) in units if l > 0]
        assert len(set(facts)) == len(facts)
        for clause in (c for c in f.clauses if len(c) == 3):
            assert len({abs(l) for l in clause}) == 3
            assert sum(1 for l in clause if l > 0) == 1


class TestGrids:
    def test_published_3sat_rows(self):
        g3 = alpha_grid(3, Family.KSAT3)
        assert g3 == [Fraction(a) for a in range(1, 12)]
        g8 = alpha_grid(8, Family.KSAT3)
        assert len(g8) == 46
        assert g8[1] - g8[0] == Fraction(1, 8)
        assert len(alpha_grid(10, Family.KSAT3)) == 56
        assert len(alpha_grid(4, Family.KSAT3)) == 26
        assert len(alpha_grid(5, Family.KSAT3)) == 31

    def test_horn_grid(self):
        assert alpha_grid(5, Family.HORN13) == [Fraction(a) for a in range(13)]

    def test_2sat_grid_total_matches_published_pool(self):
        counts = [len(alpha_grid(n, Family.KSAT2)) for n in range(3, 11)]
        assert sum(counts) == 296  # x100 formulas = the published 29,600

    def test_dataset_grid_drops_alpha_1_for_3sat(self):
        sizes = {n: len(dataset_alpha_grid(n, Family.KSAT3)) for n in range(3, 11)}
        assert sizes == {3: 10, 4: 25, 5: 30, 6: 15, 7: 10, 8: 45, 9: 10, 10: 55}

    def test_dataset_mean_alpha_is_exactly_4_7(self):
        cells = [a for n in range(3, 11) for a in dataset_alpha_grid(n, Family.KSAT3)]
        assert sum(cells) / len(cells) == Fraction(47, 10)

    def test_fallback_grid_for_other_n(self):
        g = alpha_grid(100, Family.KSAT3)
        assert g[0] == 1 and g[-1] == 11
        assert g[1] - g[0] == Fraction(1, 2)


class TestAlphaFormat:
    @pytest.mark.parametrize("frac,text", [
        (Fraction(2), "2"), (Fraction("2.2"), "2.2"), (Fraction("1.125"), "1.125"),
        (Fraction("4.25"), "4.25"), (Fraction(1, 10), "0.1"),
    ])
    def test_round_trip(self, frac, text):
        assert format_alpha(frac) == text
        assert parse_alpha(text) == frac

    def test_derived_seed_is_stable(self):
        # frozen: changing the derivation would silently re-randomize pools
        assert derive_seed(42, Family.KSAT3, 10, Fraction("4.3"), 0) \
            == 0xFE0D974654451B8F


class TestPool:
    def make_small_pool(self, counting_cap=12):
        specs = [
            GenSpec(Family.KSAT3, n, alpha, seed=11, count=4)
            for n in (4, 6)
            for alpha in (Fraction(2), Fraction("4.5"), Fraction(8))
        ]
        return build_pool(specs, counting_cap_n=counting_cap)

    def test_labels_match_brute_force(self):
        build = self.make_small_pool()
        for rec in build.records:
            assert rec.label == ("SAT" if brute_force_sat(rec.formula.clauses, rec.n) else "UNSAT")

    def test_unsat_records_have_zero_or_absent_count(self):
        build = self.make_small_pool()
        assert all(r.model_count in (0, None) for r in build.records if r.label == "UNSAT")
        build2 = self.make_small_pool(counting_cap=0)
        assert all(r.model_count is None for r in build2.records)

    def test_serialization_deterministic(self, tmp_path):
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_pool(self.make_small_pool().records, p1)
        write_pool(self.make_small_pool().records, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_gzip_round_trip_and_determinism(self, tmp_path):
        records = self.make_small_pool().records
        p1, p2 = tmp_path / "a.jsonl.gz", tmp_path / "b.jsonl.gz"
        write_pool(records, p1)
        write_pool(records, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert read_pool(p1) == records

    def test_round_trip_plain(self, tmp_path):
        records = self.make_small_pool().records
        path = tmp_path / "pool.jsonl"
        write_pool(records, path)
        assert read_pool(path) == records

    def test_id_format_and_alpha_exactness(self):
        rec = generate_instance(GenSpec(Family.KSAT3, 5, Fraction("2.2"), 7, 3), 2)
        assert rec.id == "3sat-n5-a2.2-s7-2"
        assert rec.alpha == Fraction(rec.m, rec.n)

    def test_dimacs_provenance_comment(self):
        from satlab import parse_dimacs
        rec = generate_instance(GenSpec(Family.KSAT3, 5, Fraction("2.2"), 7, 3), 2)
        text = rec.to_dimacs()
        assert text.splitlines()[0] == f"c seed={rec.seed} k=3 alpha=2.2"
        assert parse_dimacs(text) == rec.formula
        horn = generate_instance(GenSpec(Family.HORN13, 6, Fraction(2), 7, 1), 0)
        assert horn.to_dimacs().splitlines()[0] == f"c seed={horn.seed} alpha=2"

    def test_parallel_build_matches_serial(self):
        specs = paper_pool_specs(Family.KSAT3, [4], per_alpha=2, master_seed=5)
        serial = build_pool(specs, counting_cap_n=0)
        parallel = build_pool(specs, counting_cap_n=0, jobs=2)
        assert serial.records == parallel.records

    def test_jsonl_lines_are_self_contained(self, tmp_path):
        records = self.make_small_pool().records
        path = tmp_path / "pool.jsonl"
        write_pool(records, path)
        first = json.loads(path.read_text().splitlines()[0])
        assert {"id", "family", "n", "m", "alpha", "seed", "label", "region",
                "clauses"} <= set(first)


class TestRegions:
    def test_empirical_region_assignment(self):
        specs = [GenSpec(Family.KSAT3, 10, a, seed=3, count=30)
                 for a in (Fraction(1), Fraction("4.3"), Fraction(11))]
        build = build_pool(specs, counting_cap_n=0)
        by_alpha = {}
        for rec in build.records:
            by_alpha.setdefault(rec.alpha, set()).add(rec.region)
        assert by_alpha[Fraction(1)] == {"EASY_UNDER"}
        assert by_alpha[Fraction("4.3")] == {"HARD"}
        assert by_alpha[Fraction(11)] == {"EASY_OVER"}

    def test_unlabeled_group_is_unknown(self):
        rec = generate_instance(GenSpec(Family.KSAT3, 5, Fraction(2), 1, 1), 0)
        assert assign_regions([rec])[0].region == "UNKNOWN"

    def test_all_sat_above_threshold_is_easy_over(self):
        rec = generate_instance(GenSpec(Family.KSAT3, 5, Fraction(5), 1, 1), 0)
        rec = assign_regions([self._with_label(rec, "SAT")])[0]
        assert rec.region == "EASY_OVER"

    @staticmethod
    def _with_label(rec, label):
        from dataclasses import replace
        return replace(rec, label=label)


class TestPhaseRows:
    def test_rows_and_crossing(self):
        specs = [GenSpec(Family.KSAT3, 8, a, seed=2, count=20)
                 for a in (Fraction(2), Fraction(4), Fraction(6), Fraction(9))]
        build = build_pool(specs, counting_cap_n=0)
        rows = phase_rows(build)
        assert [float(r.alpha) for r in rows] == [2.0, 4.0, 6.0, 9.0]
        assert all(r.samples == 20 for r in rows)
        cross = psat_crossing(rows)
        assert cross is None or 2.0 <= cross <= 9.0
