import pytest

from modules.errors import EvaluationError, FragmentError
from modules.normal_form import to_normal_form
from modules.solver import (Verdict, bound_for_size, brute_force_sat, completeness_size, decide_sat,
                            small_model_bound, satisfiable_at_size)
from modules.structures import evaluate
from modules.syntax import FALSE, parse_formula
from utils.corpus import generate

SUCCESSOR = "(A x. E y. (R(x,y) & x != y)) & (A x y. (R(x,y) -> ~R(y,x)))"


@pytest.mark.parametrize('s, expected', [(1, 16), (2, 256), (10, 8_192_000)])
def test_bound_for_size(s, expected):
    assert bound_for_size(s) == expected


def test_bound_saturates():
    assert bound_for_size(500) == bound_for_size(61)


# ============ DECISION PROCEDURE ============

def test_false_is_unsat_at_the_bound():
    result = decide_sat(FALSE, cap=4)
    assert result.verdict is Verdict.UNSAT
    assert result.exit_code == 1
    assert result.explored_bound == small_model_bound(to_normal_form(FALSE))


def test_non_distinct_witnesses_fit_one_element():
    result = decide_sat(parse_formula("E x y z. R(x,y,z)"))
    assert result.verdict is Verdict.SAT
    assert result.witness.size == 1
    assert result.witness.relation('R') == frozenset({(0, 0, 0)})
    assert result.explored_bound == 0


def test_successor_needs_three_elements():
    phi = parse_formula(SUCCESSOR)
    result = decide_sat(phi, cap=4)
    assert result.verdict is Verdict.SAT
    assert result.witness.size == 3
    assert evaluate(result.witness, phi)
    assert list(result.summary_frame()['outcome']) == ['exhausted', 'exhausted', 'sat']
    assert brute_force_sat(phi, 4).witness.size == 3


def test_cap_gives_unknown():
    result = decide_sat(parse_formula(SUCCESSOR), cap=2)
    assert result.verdict is Verdict.UNKNOWN
    assert result.exit_code == 2
    assert result.explored_bound == 2


def test_counting_rejected():
    with pytest.raises(FragmentError):
        decide_sat(parse_formula("E[=2] x. P(x)"))


def test_parallel_search_matches_sequential():
    phi = parse_formula(SUCCESSOR)
    assert decide_sat(phi, cap=4, jobs=2).witness == decide_sat(phi, cap=4).witness


# ============ BRUTE FORCE ============

def test_contradiction_is_unsat():
    result = brute_force_sat(parse_formula("(E x. P(x)) & (A x. ~P(x))"), 3)
    assert result.verdict is Verdict.UNSAT


def test_counting_needs_enough_elements():
    phi = parse_formula("E[=2] x. P(x)")
    assert brute_force_sat(phi, 1).verdict is Verdict.UNKNOWN
    result = brute_force_sat(phi, 2)
    assert result.verdict is Verdict.SAT
    assert result.witness.size == 2


def test_completeness_size_only_for_monadic():
    assert completeness_size(parse_formula("E[=2] x. P(x)")) == 6
    assert completeness_size(parse_formula("E x y. R(x,y)")) is None


def test_sentences_only():
    with pytest.raises(EvaluationError):
        brute_force_sat(parse_formula("P(x)"), 2)
    with pytest.raises(EvaluationError):
        satisfiable_at_size(parse_formula("P(x)"), 2)


def _agree(phi, cap):
    decided = decide_sat(phi, cap=cap)
    brute = brute_force_sat(phi, cap)
    if decided.verdict is Verdict.SAT:
        assert evaluate(decided.witness, phi)
        assert brute.verdict is Verdict.SAT
        assert brute.witness.size == decided.witness.size
    if brute.verdict is Verdict.SAT:
        assert decided.verdict is Verdict.SAT
    if brute.verdict is Verdict.UNSAT:
        assert decided.verdict is not Verdict.SAT


@pytest.mark.parametrize('seed', range(5))
def test_agrees_with_brute_force(seed):
    for phi in generate('nf', 5, seed=seed):
        _agree(phi, 2)


@pytest.mark.slow
def test_agrees_with_brute_force_up_to_four():
    for phi in generate('nf', 100, seed=17):
        _agree(phi, 4)
