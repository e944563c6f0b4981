import random

import pytest

from modules.compress import (build_court, check_model, compress_model, compress_with_report,
                              court_bound, find_kings)
from modules.errors import PreconditionError
from modules.normal_form import expand_model, project_model, to_normal_form
from modules.solver import satisfiable_at_size, small_model_bound
from modules.structures import Structure, evaluate, realized_types
from modules.syntax import Vocabulary, infer_vocabulary, parse_formula
from utils.corpus import generate, random_structure

SUCCESSOR = "(A x. E y. (R(x,y) & x != y)) & (A x y. (R(x,y) -> ~R(y,x)))"
MARKED = SUCCESSOR + " & (E x. P(x)) & (A x y. ((P(x) & P(y)) -> x = y))"


def cycle(n, marked=()):
    return Structure.build(Vocabulary.of(P=1, R=2), n,
                           {'R': {(i, (i + 1) % n) for i in range(n)}, 'P': {(i,) for i in marked}})


def assert_small_model(A, nf):
    report = compress_with_report(A, nf)
    B = report.structure
    assert report.conflicts == []
    assert B.size <= small_model_bound(nf)
    assert evaluate(B, nf.to_formula())
    assert set(realized_types(B)) <= set(realized_types(A))
    _, royal = find_kings(B, nf.width)
    assert royal <= report.court.royal_types
    return report


# ============ COURT ============

def test_court_of_marked_cycle():
    nf = to_normal_form(parse_formula(MARKED))
    court = build_court(cycle(30, marked=[0]), nf)
    assert court.kings == frozenset({0})
    assert 0 in court.court
    assert len(court.court) <= court_bound(nf)
    assert list(court.members_frame().columns) == ['element', 'king', 'donor']


def test_precondition_names_failing_conjunct():
    nf = to_normal_form(parse_formula(SUCCESSOR))
    path = Structure.build(Vocabulary.of(P=1, R=2), 3, {'R': {(0, 1), (1, 2)}})
    with pytest.raises(PreconditionError, match="existential conjunct 1"):
        check_model(path, nf)
    loop = Structure.build(Vocabulary.of(P=1, R=2), 2, {'R': {(0, 1), (1, 0)}})
    with pytest.raises(PreconditionError, match="universal conjunct"):
        compress_model(loop, nf)


# ============ COMPRESSION ============

@pytest.mark.parametrize('n', [3, 5, 12, 30])
def test_successor_cycles(n):
    report = assert_small_model(cycle(n), to_normal_form(parse_formula(SUCCESSOR)))
    assert len(report.provenance_frame()) == report.structure.size


@pytest.mark.parametrize('n', [4, 9, 30])
def test_marked_cycles_keep_their_king(n):
    nf = to_normal_form(parse_formula(MARKED))
    report = assert_small_model(cycle(n, marked=[0]), nf)
    assert len(report.structure.relation('P')) == 1
    assert not report.trace_frame().empty


def test_model_without_kings_or_donors():
    nf = to_normal_form(parse_formula("A x y. (P(x) | ~R(x,y))"))
    A = Structure.from_facts(nf.vocab, 3, frozenset())
    assert build_court(A, nf).court == ()
    B = assert_small_model(A, nf).structure
    assert B.size > 0
    assert B.facts == frozenset()


# ============ CORPUS ============

def clique(n, size, marked=True):
    """Disjoint R-cliques of the given size, the first one marked with P"""
    R = {(i, j) for i in range(n) for j in range(n) if i // size == j // size}
    P = {(i,) for i in range(size)} if marked else set()
    return Structure.build(Vocabulary.of(P=1, R=2), n, {'R': R, 'P': P})


def complete_digraph(n):
    return Structure.build(Vocabulary.of(R=2), n, {'R': {(i, j) for i in range(n) for j in range(n) if i != j}})


def coloured(n):
    return Structure.build(Vocabulary.of(P=1), n, {'P': {(i,) for i in range(0, n, 2)}})


HAND_BUILT = (
    [(SUCCESSOR, cycle(n)) for n in (3, 5, 8, 12, 20, 30)]
    + [(MARKED, cycle(n, marked=[0])) for n in (4, 9, 16, 30)]
    + [("A x y. (P(x) | ~R(x,y))", Structure.build(Vocabulary.of(P=1, R=2), n)) for n in (3, 10, 30)]
    + [("A x. E y. (x != y & R(x,y))", complete_digraph(n)) for n in (3, 8, 20)]
    + [("A x. E y. (x != y & (P(x) <-> ~P(y)))", coloured(n)) for n in (4, 10, 30)]
    + [("A x y. (R(x,y) -> (P(x) <-> P(y)))", clique(n, 5)) for n in (10, 30)]
)


def _compress_pair(phi, A):
    nf = to_normal_form(phi)
    report = assert_small_model(expand_model(A, nf), nf)
    assert evaluate(project_model(report.structure, nf), phi)
    return report


@pytest.mark.parametrize('text, A', HAND_BUILT)
def test_hand_built_models(text, A):
    assert evaluate(A, parse_formula(text))
    _compress_pair(parse_formula(text), A)


def test_hand_built_corpus_covers_the_edge_cases():
    assert len(HAND_BUILT) >= 20
    assert max(A.size for _, A in HAND_BUILT) == 30
    courts = []
    for text, A in HAND_BUILT:
        nf = to_normal_form(parse_formula(text))
        courts.append(build_court(expand_model(A, nf), nf))
    assert any(not court.kings for court in courts)
    assert any(not court.court for court in courts)


def _searched_pairs(sizes, count, seed):
    for phi in generate('nf', count, seed=seed, max_nodes=20):
        for size in sizes:
            A = satisfiable_at_size(phi, size)
            if A is not None:
                yield phi, A
                break


def test_searched_models():
    pairs = 0
    for phi, A in _searched_pairs((3, 4), 12, seed=5):
        _compress_pair(phi, A)
        pairs += 1
    assert pairs >= 1


def test_random_models():
    rng = random.Random(17)
    for phi in generate('nf', 20, seed=17, max_nodes=20):
        vocab = infer_vocabulary(phi)
        for size in range(3, 9):
            A = random_structure(rng, vocab, size)
            if evaluate(A, phi):
                _compress_pair(phi, A)
                break


@pytest.mark.slow
def test_searched_models_up_to_eight():
    pairs = 0
    for phi, A in _searched_pairs(range(5, 9), 30, seed=41):
        _compress_pair(phi, A)
        pairs += 1
    assert pairs >= 1
