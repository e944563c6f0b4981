import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modules.errors import EvaluationError, StructureError
from modules.structures import (Structure, all_one_types, disjoint_union, enumerate_structures, evaluate,
                                evaluate3, evaluate_matrix_by_types, k_table, matrix_inputs, one_type,
                                parse_structure, print_structure, realized_types, reduct, relabel,
                                substructure, types_frame)
from modules.syntax import Vocabulary, parse_formula
from utils.corpus import FormulaGenerator, random_structure

VOCAB = Vocabulary.of(P=1, R=2, T=3)


@pytest.fixture
def path3():
    """0 -> 1 -> 2 with P on the ends"""
    return Structure.build(Vocabulary.of(P=1, R=2), 3, {'P': {(0,), (2,)}, 'R': {(0, 1), (1, 2)}})


# ============ STRUCTURES AND FILES ============

def test_file_format_round_trip(path3):
    text = print_structure(path3)
    assert text.splitlines()[0] == "domain = 3"
    assert parse_structure(text) == path3


def test_parse_accepts_comments_and_separators():
    A = parse_structure("# two nodes\ndomain = 2\nrel E/2 = { (0 1), (1 0) };\nP/1 = { }\n")
    assert A.size == 2
    assert A.relation('E') == frozenset({(0, 1), (1, 0)})
    assert A.relation('P') == frozenset()


@pytest.mark.parametrize('text', [
    "domain = 2\nrel E/2 = { (0 2) }",
    "domain = 2\nrel E/2 = { (0) }",
    "domain = 2\nrel E/2 = { }\nrel E/2 = { }",
    "domain = 0",
    "domain = 2 rel",
])
def test_malformed_structures(text):
    with pytest.raises(StructureError):
        parse_structure(text)


def test_substructure_renumbers(path3):
    B = substructure(path3, [2, 1])
    assert B.size == 2
    assert B.relation('R') == frozenset({(1, 0)})
    assert B.relation('P') == frozenset({(0,)})


def test_relabel_and_union(path3):
    C = relabel(path3, [2, 1, 0])
    assert C.relation('R') == frozenset({(2, 1), (1, 0)})
    U = disjoint_union(path3, path3)
    assert U.size == 6
    assert (4, 5) in U.relation('R')


def test_reduct_drops_relations(path3):
    assert reduct(path3, ['P']).vocab == Vocabulary.of(P=1)


def test_enumerate_structures_counts():
    assert sum(1 for _ in enumerate_structures(Vocabulary.of(P=1, R=2), 2)) == 2 ** 6


# ============ EVALUATION ============

def test_evaluate_quantifiers(path3):
    assert evaluate(path3, parse_formula("E x y. (R(x,y) & P(x))"))
    assert not evaluate(path3, parse_formula("A x. E y. R(x,y)"))
    assert evaluate(path3, parse_formula("E[=2] x. P(x)"))
    assert evaluate(path3, parse_formula("A x. E[<=1] y. R(x,y)"))
    assert evaluate(path3, parse_formula("R(x,y)"), {'x': 1, 'y': 2})


def test_evaluate_rejects_bad_assignments(path3):
    with pytest.raises(EvaluationError):
        evaluate(path3, parse_formula("P(x)"))
    with pytest.raises(EvaluationError):
        evaluate(path3, parse_formula("P(x)"), {'x': 3})


def test_three_valued_evaluation():
    phi = parse_formula("E[>=2] x. P(x)")
    assert evaluate3({('P', (0,)): True}, 3, phi) is None
    assert evaluate3({('P', (0,)): True, ('P', (1,)): True}, 3, phi) is True
    assert evaluate3({('P', (0,)): False, ('P', (1,)): False}, 3, phi) is False


# ============ TYPES ============

def test_one_types(path3):
    realized = realized_types(path3)
    assert len(realized) == 2
    assert realized[one_type(path3, 0)] == [0, 2]
    assert len(all_one_types(path3.vocab)) == 4
    assert list(types_frame(path3)['count']) == [2, 1]


def test_k_table_needs_distinct_elements(path3):
    assert k_table(path3, (0, 1)).holds('R', (0, 1))
    assert not k_table(path3, (0, 1)).holds('R', (1, 0))
    with pytest.raises(EvaluationError):
        k_table(path3, (1, 1))


def test_matrix_from_types_example(path3):
    phi = parse_formula("R(x,y) & P(x) & x != y")
    types, pattern, table = matrix_inputs(path3, phi, (0, 1), ('x', 'y'))
    assert evaluate_matrix_by_types(types, pattern, table, phi, ('x', 'y'))


def test_matrix_from_types_rejects_inconsistent_pattern(path3):
    phi = parse_formula("P(x) & P(y)")
    types = [one_type(path3, 0), one_type(path3, 1)]
    with pytest.raises(EvaluationError):
        evaluate_matrix_by_types(types, [(0, 1)], None, phi, ('x', 'y'))


@settings(max_examples=1000, deadline=None)
@given(st.integers(min_value=0, max_value=100_000))
def test_matrix_truth_depends_only_on_types(seed):
    rng = random.Random(seed)
    A = random_structure(rng, VOCAB, rng.randint(1, 4))
    names = ['x', 'y', 'z'][:rng.randint(1, 3)]
    phi = FormulaGenerator(VOCAB, seed).matrix(names, 0)
    elements = tuple(rng.randrange(A.size) for _ in names)
    types, pattern, table = matrix_inputs(A, phi, elements, names)
    assert evaluate(A, phi, dict(zip(names, elements))) == \
        evaluate_matrix_by_types(types, pattern, table, phi, names)
