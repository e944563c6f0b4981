import pytest

from modules.errors import ConfigError, TranslationError
from modules.solver import Verdict, brute_force_sat
from modules.structures import Structure, evaluate
from modules.syntax import (Atom, Quant, QuantKind, disj, is_foc2, parse_formula, validate_fragment,
                            variables, walk)
from modules.translate import (METHODS, PLACEHOLDER_PREFIX, equivalence_oracle, expand_star_centre,
                               incomparability_corpus, star_centre_to_foc2, star_expansion_formula,
                               to_diagram_normal_form, to_foc2, two_types)
from utils.corpus import BINARY_VOCAB, generate

EXACTLY_TWO = ("(E x y. (x != y & P(x) & P(y))) & "
               "~(E x y z. (x != y & y != z & x != z & P(x) & P(y) & P(z)))")


def assert_equivalent(f, g, max_size=3, vocab=BINARY_VOCAB):
    result = equivalence_oracle(f, g, max_size, vocab)
    assert result.equivalent, f"counterexample under {result.assignment}:\n{result.counterexample}"


# ============ ORACLE ============

def test_oracle_finds_counterexample():
    result = equivalence_oracle(parse_formula("P(x)"), parse_formula("~P(x)"), 3)
    assert result.verdict == 'counterexample'
    assert result.counterexample.size == 1
    assert result.assignment == {'x': 0}


def test_oracle_accepts_identical_formulas():
    phi = parse_formula("A x. E y. R(x,y)")
    assert equivalence_oracle(phi, phi, 2).verdict == 'equivalent'


def test_two_types_count():
    assert len(two_types(BINARY_VOCAB)) == 4 * 4 * 4


# ============ DIAGRAM NORMAL FORM ============

@pytest.mark.parametrize('text', ["E y. R(x,y)", "E x y. R(x,y)", "A y. (R(x,y) -> P(y))"])
def test_diagram_normal_form_is_equivalent(text):
    phi = parse_formula(text)
    assert_equivalent(phi, to_diagram_normal_form(phi, BINARY_VOCAB))


def test_forced_merge_leaves_unary_formula():
    assert to_foc2(parse_formula("E y. (x = y & P(y))")) == Atom('P', ('x',))


# ============ STAR CENTRE TYPES ============

def test_single_ray_expansion():
    phi = parse_formula("E y. (x != y & R(x,y))")
    expansion = expand_star_centre(phi, BINARY_VOCAB)
    assert len(expansion) == 32
    assert len(set(expansion)) == len(expansion)
    assert all(sct.width == 1 for sct in expansion)
    assert_equivalent(phi, star_expansion_formula(expansion))


def test_width_zero_expansion():
    phi = parse_formula("P(x)")
    expansion = expand_star_centre(phi, BINARY_VOCAB)
    assert len(expansion) == 2
    assert_equivalent(phi, star_expansion_formula(expansion))


def test_contradictory_literals_expand_to_nothing():
    assert expand_star_centre(parse_formula("E y. (x != y & R(x,y) & ~R(x,y))"), BINARY_VOCAB) == []


@pytest.mark.parametrize('text', [
    "E y. R(x,y)",
    "E y z. (x != y & x != z & y != z & R(y,z))",
])
def test_star_shape_violations(text):
    with pytest.raises(TranslationError):
        expand_star_centre(parse_formula(text), BINARY_VOCAB)


def test_single_ray_counts_once():
    sct = expand_star_centre(parse_formula("E y. (x != y & R(x,y))"), BINARY_VOCAB)[0]
    result = star_centre_to_foc2(sct)
    counts = [node.count for node in walk(result) if isinstance(node, Quant)]
    assert counts == [1]
    assert_equivalent(sct.to_formula(), result)


def test_identical_rays_collapse_into_one_count():
    phi = parse_formula("E y z. (x != y & x != z & y != z & R(x,y) & R(x,z))")
    twins = [sct for sct in expand_star_centre(phi, BINARY_VOCAB)
             if sct.rays[0] == sct.rays[1] and sct.vertex_types[1] == sct.vertex_types[2]]
    assert twins
    result = star_centre_to_foc2(twins[0])
    assert [node.count for node in walk(result) if isinstance(node, Quant)] == [2]
    assert is_foc2(result)
    assert_equivalent(twins[0].to_formula(), result)


def test_mixed_rays_are_equivalent():
    phi = parse_formula("E y z. (x != y & x != z & y != z & R(x,y) & ~R(z,x) & P(z))")
    for sct in expand_star_centre(phi, BINARY_VOCAB)[::32]:
        assert_equivalent(sct.to_formula(), star_centre_to_foc2(sct))


# ============ FOC2 TRANSLATION ============

def test_exactly_two_matches_counting():
    phi = parse_formula(EXACTLY_TWO)
    result = to_foc2(phi)
    assert is_foc2(result)
    vocab = BINARY_VOCAB.restrict(['P'])
    assert_equivalent(phi, result, 4, vocab)
    assert_equivalent(result, parse_formula("E[=2] x. P(x)"), 4, vocab)


def test_three_distinct_elements_need_a_count_of_three():
    phi = parse_formula("E x y z. (x != y & y != z & x != z & P(x) & P(y) & P(z))")
    result = to_foc2(phi)
    assert variables(result) <= {'x', 'y'}
    assert_equivalent(result, parse_formula("E[>=3] x. P(x)"), 4, BINARY_VOCAB.restrict(['P']))


def test_centre_blocks_go_through_star_centre_types():
    phi = parse_formula("E y. (x != y & R(x,y) & P(y))")
    expansion = expand_star_centre(phi)
    rays = {sct.ray_type(i).ray_formula('x', 'y') for sct in expansion for i in range(sct.width)}
    result = to_foc2(phi)
    bodies = [node.body for node in walk(result) if isinstance(node, Quant) and node.kind is QuantKind.AT_LEAST]
    assert bodies
    assert set(bodies) <= rays
    assert_equivalent(result, disj([star_centre_to_foc2(sct) for sct in expansion]))


@pytest.mark.parametrize('method', METHODS)
@pytest.mark.parametrize('text', [
    "E y. R(x,y)",
    "A x. E y. (R(x,y) & ~R(y,x) & P(y))",
    "E y z. (R(y,z) & P(x) & y != x)",
    "E y z. (R(y,z) & x != y & x != z & y != z & P(x) & P(z))",
])
def test_hand_picked_formulas(text, method):
    phi = parse_formula(text)
    assert_equivalent(phi, to_foc2(phi, method=method))


def test_borrowed_centre_needs_three_classes():
    # the centre itself is the only P element, so no further class can use it
    phi = parse_formula("E y z w. (R(y,z) & P(w) & x != y & x != z & x != w & y != z & y != w & z != w)")
    A = Structure.from_facts(BINARY_VOCAB, 4, [('P', (0,)), ('R', (1, 2))])
    assert not evaluate(A, phi, {'x': 0})
    assert evaluate(A, to_foc2(phi, method='verbatim'), {'x': 0})
    assert not evaluate(A, to_foc2(phi), {'x': 0})
    assert not evaluate(A, to_foc2(phi, method='hall'), {'x': 0})


def test_unknown_method_is_a_config_error():
    with pytest.raises(ConfigError, match="unknown translation method"):
        to_foc2(parse_formula("E y. R(x,y)"), method='direct')


def test_free_variable_keeps_its_name():
    result = to_foc2(parse_formula("E w. (R(v,w) & P(w))"))
    assert variables(result) <= {'v', 'x', 'y'}
    assert_equivalent(parse_formula("E w. (R(v,w) & P(w))"), result)


def test_translation_errors():
    with pytest.raises(TranslationError):
        to_foc2(parse_formula("E x y z. T(x,y,z)"))
    with pytest.raises(TranslationError):
        to_foc2(parse_formula("P(x) & Q(y)"))
    with pytest.raises(TranslationError):
        to_foc2(parse_formula("A x. E[<=1] y. R(y,x)"))


def _no_placeholders(phi):
    return not any(isinstance(node, Atom) and node.rel.startswith(PLACEHOLDER_PREFIX) for node in walk(phi))


@pytest.mark.parametrize('seed', range(4))
def test_corpus_translations_are_equivalent(seed):
    for phi in generate('binary', 6, seed=seed, max_nodes=25):
        result = to_foc2(phi, BINARY_VOCAB)
        assert is_foc2(result)
        assert _no_placeholders(result)
        assert_equivalent(phi, result, 2)
        assert_equivalent(result, to_foc2(phi, BINARY_VOCAB, method='hall'), 2)


def test_corpus_blocks_have_at_most_three_classes():
    for phi in generate('binary', 10, seed=3, max_nodes=25):
        assert to_foc2(phi, BINARY_VOCAB, method='verbatim') == to_foc2(phi, BINARY_VOCAB)


@pytest.mark.slow
@pytest.mark.parametrize('method', ['star', 'hall'])
def test_corpus_translations_up_to_three(method):
    for phi in generate('binary', 100, seed=23, max_nodes=25):
        assert_equivalent(phi, to_foc2(phi, BINARY_VOCAB, method=method), 3)


# ============ INCOMPARABILITY ============

def test_incomparability_corpus():
    (a, _), (b, _), (c, _) = incomparability_corpus()
    assert validate_fragment(a).member
    with pytest.raises(TranslationError):
        to_foc2(a)
    result = brute_force_sat(a, 2)
    assert result.witness.size == 1

    witness = brute_force_sat(b, 2).witness
    assert witness.size == 1
    assert witness.relation('R') == frozenset()
    assert any(isinstance(node, Quant) and node.kind is QuantKind.AT_MOST for node in walk(b))

    assert brute_force_sat(c, 3).verdict is Verdict.UNKNOWN


@pytest.mark.slow
def test_infinity_axiom_has_no_small_model():
    _, _, (c, _) = incomparability_corpus()
    assert brute_force_sat(c, 6).verdict is not Verdict.SAT
