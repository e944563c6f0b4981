import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modules.errors import FormulaSyntaxError, FragmentError, VocabularyError
from modules.syntax import (FALSE, TRUE, And, Atom, Eq, Not, Or, Quant, QuantKind, Vocabulary,
                            ONE_DIMENSIONALITY, OTHER, UNIFORMITY, fold_constants, free_variables,
                            is_foc2, live_variables, parse_formula, parse_vocabulary, print_formula,
                            require_member, standardize_apart, substitute, validate_fragment, variables)
from utils.corpus import UF1_VOCAB, FormulaGenerator


# ============ PARSING AND PRINTING ============

def test_parse_desugars_connectives():
    phi = parse_formula("A x. (P(x) -> x != y)")
    assert phi == Quant(QuantKind.FORALL, ('x',), Or((Not(Atom('P', ('x',))), Not(Eq('x', 'y')))))


def test_parse_counting_quantifier():
    phi = parse_formula("E[>=2] y. R(x,y)")
    assert phi.kind is QuantKind.AT_LEAST
    assert phi.count == 2
    assert print_formula(phi) == "E[>=2] y. R(x,y)"


def test_quantifier_scope_extends_right():
    phi = parse_formula("E x. P(x) & Q(x)")
    assert isinstance(phi, Quant)
    assert free_variables(phi) == frozenset()


def test_syntax_error_carries_position():
    with pytest.raises(FormulaSyntaxError) as info:
        parse_formula("P(x) & & Q(x)")
    assert info.value.line == 1
    assert info.value.column is not None


def test_duplicate_bound_variable_rejected():
    with pytest.raises(FormulaSyntaxError):
        parse_formula("E x x. P(x)")


def test_arity_clash_rejected():
    with pytest.raises(VocabularyError):
        parse_formula("R(x) & R(x,y)")


def test_unknown_symbol_against_vocabulary():
    with pytest.raises(VocabularyError):
        parse_formula("S(x)", Vocabulary.of(R=2))


def test_vocabulary_text():
    vocab = parse_vocabulary("R/3, E/1")
    assert vocab.arity('R') == 3
    assert str(vocab) == "E/1, R/3"
    with pytest.raises(VocabularyError):
        parse_vocabulary("R3")


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_printed_formulas_parse_back(seed):
    phi = FormulaGenerator(UF1_VOCAB, seed, counting=True).formula(None)
    assert parse_formula(print_formula(phi)) == phi


# ============ FRAGMENT VALIDATION ============

@pytest.mark.parametrize('text', [
    "A x y. (T(x,y) | S(y,x))",
    "E x y. (R(x,x,y) & R(y,y,x) & S(y,x))",
])
def test_uniform_blocks_accepted(text):
    assert validate_fragment(parse_formula(text)).member


def test_mixed_variable_sets_rejected():
    report = validate_fragment(parse_formula("E x y z. (R(x,y,z) & R(x,y,y))"))
    assert not report.member
    assert report.violations[0].rule == UNIFORMITY


def test_two_free_variables_rejected():
    report = validate_fragment(parse_formula("E x. A y. E z. R(x,y,z)"))
    assert not report.member
    assert report.violations[0].rule == ONE_DIMENSIONALITY
    assert report.violations_frame().iloc[0]['severity'] == 'HIGH'


def test_counting_needs_counting_fragment():
    phi = parse_formula("A x. E[<=1] y. R(y,x)")
    report = validate_fragment(phi)
    assert not report.member
    assert report.violations[0].rule == OTHER
    assert validate_fragment(phi, allow_counting=True).member


def test_equalities_do_not_count_for_uniformity():
    assert validate_fragment(parse_formula("E x y z. (R(x,y) & y != z & P(z))")).member


def test_require_member_raises():
    with pytest.raises(FragmentError):
        require_member(parse_formula("E x y z. (R(x,y,z) & R(x,y,y))"))


def test_live_variables_of_matrix():
    assert live_variables(parse_formula("R(x,y) | (S(y,x) & P(z))")) == frozenset({'x', 'y'})
    with pytest.raises(FragmentError):
        live_variables(parse_formula("R(x,y) & R(y,z)"))


# ============ RENAMING ============

def test_substitute_avoids_capture():
    phi = substitute(parse_formula("E y. R(x,y)"), {'x': 'y'})
    assert free_variables(phi) == frozenset({'y'})
    assert phi.vars != ('y',)


def test_standardize_apart_gives_fresh_names():
    phi = standardize_apart(parse_formula("(E x. P(x)) & (E x. Q(x))"))
    first, second = phi.parts
    assert first.vars != second.vars
    assert 'x' not in variables(phi)


def test_fold_constants():
    assert fold_constants(And((TRUE, Atom('P', ('x',))))) == Atom('P', ('x',))
    assert fold_constants(Or((FALSE, Not(TRUE)))) == FALSE


def test_two_variable_check():
    assert is_foc2(parse_formula("A x. E[>=2] y. (R(x,y) & E x. R(y,x))"))
    assert not is_foc2(parse_formula("E x y z. R(x,y,z)"))
