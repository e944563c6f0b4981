import random

import pytest

from modules.errors import ConfigError
from modules.syntax import validate_fragment
from utils.corpus import BINARY_VOCAB, KINDS, corpus_frame, generate, random_structure


@pytest.mark.parametrize('kind', KINDS)
def test_corpus_members_are_in_the_fragment(kind):
    formulas = generate(kind, 8, seed=2, max_nodes=25)
    assert len(formulas) == 8
    assert all(validate_fragment(phi).member for phi in formulas)
    assert generate(kind, 8, seed=2, max_nodes=25) == formulas


def test_unknown_kind_is_a_config_error():
    with pytest.raises(ConfigError, match="unknown corpus kind"):
        generate('modal', 3)


def test_corpus_frame():
    df = corpus_frame('nf', 4, seed=1)
    assert list(df.columns) == ['index', 'formula', 'nodes']
    assert len(df) == 4


def test_random_structure_is_seeded():
    A = random_structure(random.Random(3), BINARY_VOCAB, 4)
    B = random_structure(random.Random(3), BINARY_VOCAB, 4)
    assert A == B
    assert A.size == 4
