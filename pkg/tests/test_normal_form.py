import pytest

from modules.errors import FragmentError
from modules.normal_form import (FRESH_PREFIX, TRIVIAL_FORALL, expand_model, negation_normal_form,
                                 project_model, size_budget, to_normal_form)
from modules.solver import satisfiable_at_size
from modules.structures import evaluate
from modules.syntax import FALSE, Or, Quant, QuantKind, parse_formula, validate_fragment
from utils.corpus import UF1_VOCAB, generate


# ============ NEGATION NORMAL FORM ============

@pytest.mark.parametrize('text, expected', [
    ("~(E[>=2] y. P(y))", "E[<=1] y. P(y)"),
    ("~(E[<=1] y. P(y))", "E[>=2] y. P(y)"),
    ("~(E[=0] y. P(y))", "E[>=1] y. P(y)"),
    ("~(E x. (P(x) & ~Q(x)))", "A x. (~P(x) | Q(x))"),
])
def test_negation_flips_quantifiers(text, expected):
    assert negation_normal_form(parse_formula(text)) == parse_formula(expected)


def test_negated_at_least_zero_is_false():
    assert negation_normal_form(parse_formula("~(E[>=0] y. P(y))")) == FALSE


def test_negated_exact_count_splits():
    phi = negation_normal_form(parse_formula("~(E[=2] y. P(y))"))
    assert isinstance(phi, Or)
    assert [part.kind for part in phi.parts] == [QuantKind.AT_MOST, QuantKind.AT_LEAST]
    assert [part.count for part in phi.parts] == [1, 3]


# ============ NORMAL FORM ============

def test_forall_exists_sentence_is_already_normal():
    nf = to_normal_form(parse_formula("A x. E y. (R(x,y) & P(y))"))
    assert nf.m_exists == 1
    assert nf.univ_conjuncts == (TRIVIAL_FORALL,)
    assert nf.fresh_symbols == ()
    assert nf.exist_conjuncts[0].width == 1


def test_nested_blocks_get_markers():
    nf = to_normal_form(parse_formula("(E x. P(x)) | (A x. E y. R(x,y))"))
    assert nf.fresh_symbols
    assert all(name.startswith(FRESH_PREFIX) for name in nf.fresh_symbols)
    assert validate_fragment(nf.to_formula()).member
    assert nf.size <= size_budget(parse_formula("(E x. P(x)) | (A x. E y. R(x,y))"))


def test_false_normalizes_to_failing_universal():
    nf = to_normal_form(FALSE)
    assert nf.m_forall == 1
    assert not validate_fragment(nf.to_formula()).violations


def test_rejects_counting_and_free_variables():
    with pytest.raises(FragmentError):
        to_normal_form(parse_formula("E[>=2] x. P(x)"))
    with pytest.raises(FragmentError):
        to_normal_form(parse_formula("E y. R(x,y)"))
    with pytest.raises(FragmentError):
        to_normal_form(parse_formula("E x y z. (R(x,y,z) & R(x,y,y))"))


def test_normal_form_shape():
    for phi in generate('uf1', 30, seed=3):
        nf = to_normal_form(phi)
        for conjunct in nf.exist_conjuncts:
            formula = conjunct.to_formula()
            assert isinstance(formula, Quant) and formula.kind is QuantKind.FORALL
        assert nf.size <= size_budget(phi)


def assert_equisatisfiable(phi, size):
    nf = to_normal_form(phi, UF1_VOCAB)
    model = satisfiable_at_size(phi, size, UF1_VOCAB)
    nf_model = satisfiable_at_size(nf.to_formula(), size, nf.vocab)
    assert (model is None) == (nf_model is None)
    if model is not None:
        assert evaluate(expand_model(model, nf), nf.to_formula())
    if nf_model is not None:
        assert evaluate(project_model(nf_model, nf), phi)


@pytest.mark.parametrize('seed', range(4))
def test_equisatisfiable_at_each_size(seed):
    for phi in generate('uf1', 10, seed=seed, max_nodes=20):
        for size in (1, 2):
            assert_equisatisfiable(phi, size)


@pytest.mark.slow
@pytest.mark.parametrize('size', [1, 2, 3])
def test_equisatisfiable_over_two_hundred_formulas(size):
    for phi in generate('uf1', 200, seed=11, max_nodes=20):
        assert_equisatisfiable(phi, size)
