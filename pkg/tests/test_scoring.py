import json
import random
from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chessbench.scoring import (
    EvalResult,
    MissingChoice,
    OrphanIds,
    aggregate,
    closest_choice,
    exact_string_match,
    levenshtein,
    multiple_choice_grade,
    normalized_levenshtein,
    render_json,
    render_table,
    render_tsv,
    report,
    score_all,
    score_instance,
)
from chessbench.taskgen import TaskInstance

SHORT_TEXT = st.text(alphabet="abcdef/12345 KQkq", max_size=14)


def recursive_distance(a, b):
    """Textbook recursive edit distance, memoised; independent of the DP implementation."""

    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

    return d(len(a), len(b))


def mc_instance(scores, kind="checkmate_in_one"):
    return TaskInstance(kind, "", "x", target_scores=scores, metadata={"id": "i"})


# --- exact match -------------------------------------------------------------------------


@pytest.mark.parametrize(
    "response,targets,expected",
    [
        ("Bxh7+", ["Bxh7+"], 1),
        ("h3", ["h3", "f3"], 1),
        ("I think Bxh7+ wins", ["Bxh7+"], 0),
        ("  f3.  ", ["h3", "f3"], 1),
        ("Bxh7", ["Bxh7+"], 0),
        ("Bxh7#", ["Bxh7"], 1),  # targets without check marks: marks stripped on both sides
        ("f3 is the answer", ["f3"], 1),
        ("", ["f3"], 0),
        ("g4", ["h3", "f3"], 0),
    ],
)
def test_exact_string_match_examples(response, targets, expected):
    assert exact_string_match(response, targets) == expected


@given(st.text(alphabet=" \t\n", max_size=4), st.text(alphabet=" \t\n", max_size=4), st.sampled_from(["h3", "f3", "Bxh7+", "e4", "zz"]))
def test_exact_match_whitespace_invariant(left, right, response):
    targets = ["h3", "f3", "Bxh7+"]
    assert exact_string_match(left + response + right, targets) == exact_string_match(response, targets)


# --- Levenshtein -------------------------------------------------------------------------


def test_levenshtein_examples():
    assert levenshtein("kitten", "sitting") == 3
    assert normalized_levenshtein("kitten", "sitting") == pytest.approx(1 - 3 / 7)
    assert normalized_levenshtein("", "") == 1.0
    assert normalized_levenshtein("abc", "") == 0.0
    fen = "8/6kp/6p1/Qp1N4/3P1p2/5P2/PP3qPK/8 b - - 0 36"
    assert normalized_levenshtein(fen, fen) == 1.0


@settings(max_examples=500)
@given(SHORT_TEXT, SHORT_TEXT)
def test_levenshtein_matches_recursive_oracle(a, b):
    assert levenshtein(a, b) == recursive_distance(a, b)


@settings(max_examples=500)
@given(SHORT_TEXT, SHORT_TEXT, SHORT_TEXT)
def test_levenshtein_symmetry_and_triangle(a, b, c):
    sab = normalized_levenshtein(a, b)
    assert sab == normalized_levenshtein(b, a)
    assert 0.0 <= sab <= 1.0
    assert normalized_levenshtein(a, c) >= sab + normalized_levenshtein(b, c) - 1 - 1e-12


# --- multiple choice -------------------------------------------------------------------


def test_mc_grade():
    inst = mc_instance({"Qc1": 0.0, "Bxh7+": 1.0, "Kf1": 0.0})
    assert multiple_choice_grade(inst, {"Qc1": 0.1, "Bxh7+": 0.8, "Kf1": 0.1}) == 1.0
    assert multiple_choice_grade(inst, {"Qc1": 0.9, "Bxh7+": 0.8, "Kf1": 0.1}) == 0.0
    # ties go to the earlier choice in instance order
    assert multiple_choice_grade(inst, {"Qc1": 0.5, "Bxh7+": 0.5, "Kf1": 0.5}) == 0.0
    with pytest.raises(MissingChoice):
        multiple_choice_grade(inst, {"Qc1": 1.0})


def test_mc_general_policy_grade():
    scores = {f"m{k}": k / 36 for k in range(37)}
    inst = mc_instance(scores, "general_policy")
    model = {c: 0.0 for c in scores}
    model["m9"] = 3.0
    assert multiple_choice_grade(inst, model) == pytest.approx(9 / 36)


@settings(max_examples=300)
@given(st.lists(st.floats(min_value=0, max_value=1), min_size=2, max_size=8), st.data())
def test_mc_grade_bounds(values, data):
    values[-1] = 1.0
    choices = {f"c{k}": v for k, v in enumerate(values)}
    inst = mc_instance(choices, "state_value")
    model = {c: data.draw(st.floats(min_value=-5, max_value=5)) for c in choices}
    grade = multiple_choice_grade(inst, model)
    assert 0.0 <= grade <= 1.0
    best = max(model.values())
    winner = next(c for c in choices if model[c] == best)
    if choices[winner] == 1.0:
        assert grade == 1.0


def test_uniform_chooser_expectation():
    rng = random.Random(0)
    for n in (3, 4, 5):
        inst = mc_instance({f"c{k}": 1.0 if k == 0 else 0.0 for k in range(n)}, "state_value")
        total = 0.0
        for _ in range(10000):
            pick = rng.choice(inst.choices)
            total += multiple_choice_grade(inst, {c: 1.0 if c == pick else 0.0 for c in inst.choices})
        assert abs(total / 10000 - 1 / n) < 0.02


def test_closest_choice():
    assert closest_choice(" White has advantage ", ["Black has advantage.", "White has advantage."]) == "White has advantage."
    assert closest_choice("zzz", ["a", "b"]) == "a"


# --- aggregation and reports -------------------------------------------------------------


def test_aggregate_examples():
    ones = aggregate([(str(i), 1.0) for i in range(100)])
    assert ones.render() == "100.0 ± 0.0"
    half = aggregate([(str(i), float(i % 2)) for i in range(100)])
    assert half.mean == 0.5
    assert half.stderr == pytest.approx(0.05025, abs=1e-5)
    assert half.render() == "50.0 ± 5.0"
    single = aggregate([("a", 0.3)])
    assert single.stderr == 0.0 and single.n == 1
    with pytest.raises(ValueError):
        aggregate([])


def state_inst(i, split):
    return TaskInstance("state_tracking", "", "e2", targets=["e3", "e4"], metadata={"id": f"s{i}", "report_split": split})


def test_score_all_and_report(tmp_path):
    splits = ["Syn Long", "Real Short", "Real Med", "Syn Short", "Real Long", "Syn Med"]
    insts = [state_inst(i, splits[i % 6]) for i in range(24)]
    insts.append(TaskInstance("pgn_to_fen", "", "1. e4", targets=["abcd"], metadata={"id": "f"}))
    insts.append(mc_instance({"a": 0.0, "b": 1.0}))
    insts[-1].metadata["id"] = "m"
    responses = [{"id": f"s{i}", "response": "e4" if i % 2 else "e5"} for i in range(24)]
    responses += [{"id": "f", "response": "abcx"}, {"id": "m", "choice_scores": {"a": 0.1, "b": 0.9}}]
    items = score_all(insts, responses)
    assert [it["metric"] for it in items[-2:]] == ["levenshtein", "mc"]
    assert items[-2]["score"] == pytest.approx(0.75)
    results = report(items)
    st_rows = [r for r in results if r.task_kind == "state_tracking"]
    assert [r.split for r in st_rows] == ["Real Short", "Real Med", "Real Long", "Syn Short", "Syn Med", "Syn Long"]
    assert all(r.n == 4 for r in st_rows)
    table = render_table(results)
    assert "Real Short" in table and "±" in table
    tsv = render_tsv(results).splitlines()
    assert tsv[0].split("\t")[:3] == ["task_kind", "split", "metric"]
    assert len(tsv) == len(results) + 1
    data = json.loads(render_json(results))
    assert data[0]["display"] == results[0].render()


def test_orphans():
    insts = [state_inst(0, "Real Short"), state_inst(1, "Real Short")]
    with pytest.raises(OrphanIds) as info:
        score_all(insts, [{"id": "s0", "response": "e4"}, {"id": "zz", "response": "e4"}])
    assert info.value.missing_responses == ["s1"]
    assert info.value.unknown_responses == ["zz"]


def test_score_instance_free_text_mc():
    inst = mc_instance({"Black has advantage.": 0.0, "White has advantage.": 1.0}, "state_value")
    assert score_instance(inst, {"response": "White has advantage"}) == ("mc", 1.0)


def test_eval_result_to_dict():
    r = EvalResult("state_tracking", 2, 0.5, 0.1, split="Real Short", metric="esm")
    assert r.to_dict()["display"] == "50.0 ± 10.0"
