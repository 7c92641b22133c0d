import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from satlab import Formula, SolveMode, SolveOptions, Verdict, evaluate, solve
from satlab.cnf import EvalStatus
from satlab.encodings import (
    ClaimKind,
    ExampleBank,
    MenuPuzzle,
    Person,
    PromptEncoding,
    Task,
    assemble_fewshot,
    build_menu_puzzle,
    cnf_user_block,
    decode_cnf_answer,
    decode_menu_answer,
    decode_translate_cnf,
    encode_cnf_prompt,
    encode_menu,
    encode_translate_prompt,
    load_item_pool,
    load_name_pool,
    menu_user_block,
    render_cnf_latex,
    system_text,
    template_versions,
)
from satlab.errors import EncodingError, TranslateParseError
from satlab.generators import gen_ksat

# the worked menu example: six people over five dishes
MENU_ITEMS = {1: "nachos", 2: "ratatouille", 3: "pie", 4: "burger", 5: "ravioli"}
MENU_FORMULA = Formula(5, [
    [1, 2, -3],        # Jay
    [3, -4, -5],       # Ada
    [5, -3, -4],       # Zoe
    [2, -3, -1],       # Arun
    [2, -5, -1],       # Ula
    [1, 2, -4],        # Ying
])
MENU_PEOPLE = (
    Person("Jay", ("nachos", "ratatouille"), ("pie",)),
    Person("Ada", ("pie",), ("burger", "ravioli")),
    Person("Zoe", ("ravioli",), ("pie", "burger")),
    Person("Arun", ("ratatouille",), ("pie", "nachos")),
    Person("Ula", ("ratatouille",), ("ravioli", "nachos")),
    Person("Ying", ("nachos", "ratatouille"), ("burger",)),
)
MENU_PUZZLE = MenuPuzzle(MENU_ITEMS, MENU_PEOPLE, MENU_FORMULA)
MENU_WORKED_SOLUTION = (
    "All participants are satisfied with this combination, and no item "
    "appears in both lists.\n```python\norderable=[pie, ratatouille, nachos]\n"
    "not_orderable=[burger, ravioli]\n```"
)

# the worked translate example: six people over three dishes
TRANSLATE_ITEMS = {1: "naan", 2: "curry", 3: "tandoori"}
TRANSLATE_FORMULA = Formula(3, [
    [1, 2, -3],    # Om
    [2, -1, -3],   # Bao
    [1, -2, -3],   # Nic
    [2, -1, -3],   # Pat
    [3, 1, 2],     # Du
    [2, -3, -1],   # Kim
])
TRANSLATE_PEOPLE = (
    Person("Om", ("naan", "curry"), ("tandoori",)),
    Person("Bao", ("curry",), ("naan", "tandoori")),
    Person("Nic", ("naan",), ("curry", "tandoori")),
    Person("Pat", ("curry",), ("naan", "tandoori")),
    Person("Du", ("tandoori", "naan", "curry"), ()),
    Person("Kim", ("curry",), ("tandoori", "naan")),
)
TRANSLATE_PUZZLE = MenuPuzzle(TRANSLATE_ITEMS, TRANSLATE_PEOPLE, TRANSLATE_FORMULA)
TRANSLATE_WORKED_ANSWER = (
    r"(\text{naan} \lor \text{curry} \lor \neg \text{tandoori}) \land "
    r"(\text{curry} \lor \neg \text{naan} \lor \neg \text{tandoori}) \land "
    r"(\text{naan} \lor \neg \text{curry} \lor \neg \text{tandoori}) \land "
    r"(\text{curry} \lor \neg \text{naan} \lor \neg \text{tandoori}) \land "
    r"(\text{tandoori} \lor \text{naan} \lor \text{curry}) \land "
    r"(\text{curry} \lor \neg \text{tandoori} \lor \neg \text{naan})"
)


def clause_multiset(formula):
    return sorted(tuple(sorted(c)) for c in formula.clauses)


def menu_record_formula():
    """The menu fixture as a labeled pool record (label verified satisfiable)."""
    from dataclasses import replace
    from fractions import Fraction
    from satlab.generators import Family, GenSpec, generate_instance

    rec = generate_instance(GenSpec(Family.KSAT3, 5, Fraction("2.2"), 1, 1), 0)
    return replace(rec, formula=MENU_FORMULA, n=5, m=6, label="SAT")


class TestMenuEncoding:
    def test_fixture_user_block_matches_worked_example(self):
        assert menu_user_block(MENU_PUZZLE) == (
            "Preferences: Jay: Likes nachos, ratatouille. Dislikes pie. "
            "Ada: Likes pie. Dislikes burger, ravioli. "
            "Zoe: Likes ravioli. Dislikes pie, burger. "
            "Arun: Likes ratatouille. Dislikes pie, nachos. "
            "Ula: Likes ratatouille. Dislikes ravioli, nachos. "
            "Ying: Likes nachos, ratatouille. Dislikes burger."
        )

    def test_single_positive_clause(self):
        puzzle = build_menu_puzzle(Formula(1, [[1]]), seed=4)
        person = puzzle.people[0]
        assert person.likes == (puzzle.var_to_item[1],)
        assert person.dislikes == ()

    def test_prompt_is_system_plus_preferences(self):
        _, prompt = encode_menu(MENU_FORMULA, seed=1)
        assert prompt.startswith(system_text(PromptEncoding.MENU))
        assert "\n\nPreferences: " in prompt

    def test_deterministic_under_seed(self):
        f = gen_ksat(6, 12, 3, 5)
        a, _ = encode_menu(f, seed=9)
        b, _ = encode_menu(f, seed=9)
        c, _ = encode_menu(f, seed=10)
        assert a == b
        assert a.var_to_item != c.var_to_item

    def test_bijection_and_person_order(self):
        f = gen_ksat(8, 15, 3, 2)
        puzzle, _ = encode_menu(f, seed=0)
        inverse = puzzle.item_to_var
        assert all(inverse[item] == var for var, item in puzzle.var_to_item.items())
        assert len(set(puzzle.var_to_item.values())) == f.n
        assert len(puzzle.people) == f.m
        assert len({p.name for p in puzzle.people}) == f.m
        for person, clause in zip(puzzle.people, f.clauses):
            assert person.likes == tuple(puzzle.var_to_item[l] for l in clause if l > 0)
            assert person.dislikes == tuple(puzzle.var_to_item[-l] for l in clause if l < 0)

    def test_pool_exhaustion(self):
        with pytest.raises(EncodingError):
            build_menu_puzzle(Formula(3, [[1, 2, 3]]), item_pool=["pie", "naan"])
        with pytest.raises(EncodingError):
            build_menu_puzzle(Formula(2, [[1], [2], [1, 2]]), name_pool=["Jay"])

    def test_shipped_pools_are_large_enough(self):
        assert len(set(load_item_pool())) >= 200
        assert len(set(load_name_pool())) >= 150


class TestMenuDecoding:
    def test_paper_worked_solution(self):
        ans = decode_menu_answer(MENU_WORKED_SOLUTION, MENU_PUZZLE, Task.SEARCH)
        assert ans.kind is ClaimKind.SAT_WITH
        assert set(ans.orderable) == {"pie", "ratatouille", "nachos"}
        assert set(ans.not_orderable) == {"burger", "ravioli"}
        assert evaluate(MENU_FORMULA, ans.assignment).status is EvalStatus.SATISFIED

    def test_empty_lists_claim_unsat(self):
        text = "```python\norderable=[]\nnot_orderable=[]\n```"
        assert decode_menu_answer(text, MENU_PUZZLE, Task.SEARCH).kind \
            is ClaimKind.UNSAT_CLAIM

    def test_overlap_is_unparseable(self):
        text = "```python\norderable=[pie]\nnot_orderable=[pie, burger]\n```"
        ans = decode_menu_answer(text, MENU_PUZZLE, Task.SEARCH)
        assert ans.kind is ClaimKind.UNPARSEABLE
        assert "pie" in ans.reason

    def test_unknown_items_warn_but_parse(self):
        text = "```python\norderable=[pie, sushi]\nnot_orderable=[burger]\n```"
        ans = decode_menu_answer(text, MENU_PUZZLE, Task.SEARCH)
        assert ans.kind is ClaimKind.SAT_WITH
        assert ans.assignment == {3: True, 4: False}
        assert any("sushi" in w for w in ans.warnings)

    def test_quoted_items_accepted(self):
        text = "```python\norderable=['pie', \"nachos\"]\nnot_orderable=[]\n```"
        ans = decode_menu_answer(text, MENU_PUZZLE, Task.SEARCH)
        assert ans.assignment == {3: True, 1: True}

    def test_missing_fence_is_unparseable(self):
        ans = decode_menu_answer("orderable=[pie] not_orderable=[]",
                                 MENU_PUZZLE, Task.SEARCH)
        assert ans.kind is ClaimKind.UNPARSEABLE

    def test_last_answer_block_wins(self):
        text = (
            "First attempt:\n```python\norderable=[pie]\nnot_orderable=[nachos]\n```\n"
            "Wait, reconsidering.\n"
            "```python\norderable=[burger]\nnot_orderable=[ravioli]\n```"
        )
        ans = decode_menu_answer(text, MENU_PUZZLE, Task.SEARCH)
        assert ans.orderable == ("burger",)

    @given(st.text(max_size=400))
    @settings(max_examples=120, deadline=None)
    def test_decoder_total_over_garbage(self, text):
        ans = decode_menu_answer(text, MENU_PUZZLE, Task.SEARCH)
        assert ans.kind in ClaimKind

    def test_ground_truth_round_trip_1000_instances(self):
        from satlab.subjects import _render_menu_answer
        rng = random.Random(77)
        checked_sat = 0
        for i in range(1000):
            n = rng.randint(3, 8)
            f = gen_ksat(n, rng.randint(n, 5 * n), 3, rng.getrandbits(32))
            puzzle, _ = encode_menu(f, seed=i)
            out = solve(f, SolveMode.SEARCH)
            if out.verdict is not Verdict.SAT:
                continue
            text = _render_menu_answer(puzzle, out.assignment)
            ans = decode_menu_answer(text, puzzle, Task.SEARCH)
            assert ans.kind is ClaimKind.SAT_WITH
            assert evaluate(f, ans.assignment).status is EvalStatus.SATISFIED
            checked_sat += 1
        assert checked_sat > 400


class TestCnfEncoding:
    def test_prompt_embeds_clause_list_verbatim(self):
        from oracles import PAPER_FORMULA
        text = cnf_user_block(Formula(5, PAPER_FORMULA))
        assert text.startswith("Formula: [[-3, 1, -4], [-4, -2, 1], [-1, -4, 5]")

    def test_full_prompt_has_system_message(self):
        prompt = encode_cnf_prompt(Formula(2, [[1, -2]]))
        assert prompt.startswith("Let's play the SAT (satisfiability) game.")

    def test_paper_answer_decodes(self):
        from oracles import PAPER_ASSIGNMENT, PAPER_FORMULA
        text = "```python\noutput: {1: True, 2: True, 3: False, 4: True, 5: True}\n```"
        ans = decode_cnf_answer(text, Formula(5, PAPER_FORMULA), Task.SEARCH)
        assert ans.kind is ClaimKind.SAT_WITH
        assert ans.assignment == PAPER_ASSIGNMENT

    def test_empty_dict_claims_unsat(self):
        ans = decode_cnf_answer("output: {}", Formula(2, [[1]]), Task.SEARCH)
        assert ans.kind is ClaimKind.UNSAT_CLAIM

    def test_no_marker_unparseable(self):
        ans = decode_cnf_answer("{1: True}", Formula(2, [[1]]), Task.SEARCH)
        assert ans.kind is ClaimKind.UNPARSEABLE

    def test_partial_mapping_kept(self):
        ans = decode_cnf_answer("output: {2: False}", Formula(3, [[1, 2]]), Task.SEARCH)
        assert ans.assignment == {2: False}

    def test_out_of_range_keys_warned(self):
        ans = decode_cnf_answer("output: {9: True, 1: False}",
                                Formula(2, [[1]]), Task.SEARCH)
        assert ans.assignment == {1: False}
        assert ans.warnings

    def test_last_output_wins_and_lowercase_booleans(self):
        text = "output: {1: True}\n...rethinking...\noutput: {1: false, 2: true}"
        ans = decode_cnf_answer(text, Formula(2, [[1, 2]]), Task.SEARCH)
        assert ans.assignment == {1: False, 2: True}

    @given(st.text(max_size=400))
    @settings(max_examples=120, deadline=None)
    def test_decoder_total_over_garbage(self, text):
        ans = decode_cnf_answer(text, Formula(3, [[1, 2, 3]]), Task.SEARCH)
        assert ans.kind in ClaimKind


class TestTranslate:
    def test_prompt_carries_preferences(self):
        prompt = encode_translate_prompt(TRANSLATE_PUZZLE)
        assert "Conjunctive Normal Form" in prompt
        assert "Om: Likes naan, curry. Dislikes tandoori." in prompt

    def test_paper_worked_answer_decodes_to_source(self):
        decoded = decode_translate_cnf(TRANSLATE_WORKED_ANSWER, TRANSLATE_PUZZLE)
        assert decoded.clauses[0] == (1, 2, -3)
        assert clause_multiset(decoded) == clause_multiset(TRANSLATE_FORMULA)

    def test_single_person_single_like(self):
        puzzle = build_menu_puzzle(Formula(1, [[1]]), seed=3)
        item = puzzle.var_to_item[1]
        decoded = decode_translate_cnf(f"(\\text{{{item}}})", puzzle)
        assert decoded.clauses == ((1,),)

    def test_align_markup_tolerated(self):
        text = ("\\begin{align*}\n&(\\text{naan} \\lor \\text{curry} \\lor "
                "\\neg \\text{tandoori}) \\land \\\\\n&(\\text{tandoori} \\lor "
                "\\text{naan} \\lor \\text{curry})\n\\end{align*}")
        decoded = decode_translate_cnf(text, TRANSLATE_PUZZLE)
        assert len(decoded.clauses) == 2

    def test_unknown_items_listed(self):
        with pytest.raises(TranslateParseError) as err:
            decode_translate_cnf(r"(\text{naan} \lor \text{pizza})", TRANSLATE_PUZZLE)
        assert err.value.unknown_items == ["pizza"]

    def test_non_cnf_rejected(self):
        for bad in ["", "()", r"\land \land", "naan \\lor \\lor curry"]:
            with pytest.raises(TranslateParseError):
                decode_translate_cnf(bad, TRANSLATE_PUZZLE)

    def test_self_loop_round_trip_200_instances(self):
        rng = random.Random(13)
        for i in range(200):
            n = rng.randint(2, 8)
            f = gen_ksat(n, rng.randint(1, 4 * n), min(3, n), rng.getrandbits(32))
            puzzle, _ = encode_menu(f, seed=i)
            decoded = decode_translate_cnf(render_cnf_latex(puzzle), puzzle)
            assert clause_multiset(decoded) == clause_multiset(f)


class TestFewShot:
    def bank(self, size=6):
        entries = []
        from satlab.encodings import BankEntry
        for i in range(size):
            entries.append(BankEntry(f"inst-{i}", f"problem {i}", f"solution {i}"))
        return ExampleBank(entries)

    def test_zero_shot_is_system_plus_target(self):
        msgs = assemble_fewshot(Task.SEARCH, PromptEncoding.MENU, 0, None, 1,
                                "target", "t0")
        assert [m["role"] for m in msgs] == ["system", "user"]
        assert msgs[-1]["content"] == "target"

    def test_three_shot_has_eight_segments(self):
        msgs = assemble_fewshot(Task.SEARCH, PromptEncoding.CNF, 3, self.bank(),
                                1, "target", "t0")
        assert [m["role"] for m in msgs] == [
            "system", "user", "assistant", "user", "assistant",
            "user", "assistant", "user",
        ]

    def test_target_never_among_shots(self):
        bank = self.bank(4)
        for seed in range(40):
            msgs = assemble_fewshot(Task.SEARCH, PromptEncoding.MENU, 3, bank,
                                    seed, "target text", "inst-2")
            shown = [m["content"] for m in msgs[1:-1]]
            assert "problem 2" not in shown

    def test_draw_without_replacement(self):
        msgs = assemble_fewshot(Task.SEARCH, PromptEncoding.MENU, 3, self.bank(),
                                5, "t", "none")
        problems = [m["content"] for m in msgs if m["content"].startswith("problem")]
        assert len(set(problems)) == 3

    def test_bank_too_small(self):
        with pytest.raises(EncodingError):
            assemble_fewshot(Task.SEARCH, PromptEncoding.MENU, 3, self.bank(3),
                             1, "t", "inst-0")

    def test_deterministic_under_seed(self):
        a = assemble_fewshot(Task.SEARCH, PromptEncoding.MENU, 3, self.bank(), 7,
                             "t", "x")
        b = assemble_fewshot(Task.SEARCH, PromptEncoding.MENU, 3, self.bank(), 7,
                             "t", "x")
        assert a == b


class TestTemplates:
    def test_versions_are_stable_digests(self):
        v1 = template_versions()
        v2 = template_versions()
        assert v1 == v2
        assert set(v1) == {"menu", "cnf", "translate"}
        assert all(len(d) == 12 for d in v1.values())

    def test_menu_system_text_core_rules(self):
        text = system_text(PromptEncoding.MENU)
        assert "No item can appear on both lists" in text
        assert "output empty lists for both" in text

    def test_cnf_system_text_core_rules(self):
        text = system_text(PromptEncoding.CNF)
        assert "At least one literal in each clause should be True" in text
        assert "EMPTY dictionary" in text
