import logging
import random
from typing import Final

import pandas as pd

from modules.errors import ConfigError, InternalInvariantError
from modules.structures import Structure, all_facts
from modules.syntax import (And, Atom, Eq, Not, Or, Quant, QuantKind, Vocabulary, conj, node_count,
                            print_formula, validate_fragment)

LOGGER: Final = logging.getLogger(__name__)

UF1_VOCAB: Final = Vocabulary.of(P=1, Q=1, R=2, T=3)
BINARY_VOCAB: Final = Vocabulary.of(P=1, R=2)
KINDS: Final = ('uf1', 'nf', 'binary')


class FormulaGenerator:
    """Seeded random UF1= formulas; every output is checked for membership"""

    def __init__(self, vocab, seed=0, max_depth=2, max_block=2, counting=False):
        self.vocab = vocab
        self.rng = random.Random(seed)
        self.max_depth = max_depth
        self.max_block = max_block
        self.counting = counting
        self._names = 0

    def fresh(self):
        self._names += 1
        return f"v{self._names}"

    def unary_atom(self, var):
        """Random symbol applied to var alone"""
        name, arity = self.rng.choice(self.vocab.symbols)
        return Atom(name, (var,) * arity)

    def live_atom(self, live):
        """Random atom using every live variable"""
        wide = [(name, arity) for name, arity in self.vocab.symbols if arity >= len(live)]
        name, arity = self.rng.choice(wide)
        args = list(live) + [self.rng.choice(live) for _ in range(arity - len(live))]
        self.rng.shuffle(args)
        return Atom(name, tuple(args))

    def combine(self, parts):
        """Random conjunction or disjunction, some parts negated"""
        parts = [Not(p) if self.rng.random() < 0.3 else p for p in parts]
        if len(parts) == 1:
            return parts[0]
        return And(tuple(parts)) if self.rng.random() < 0.5 else Or(tuple(parts))

    def matrix(self, names, depth, live=None):
        """Quantifier-free skeleton over names, plus sub-blocks while depth remains"""
        if live is None:
            widths = [k for k in range(2, len(names) + 1) if k <= self.vocab.max_arity]
            live = tuple(self.rng.sample(names, self.rng.choice(widths))) if widths else ()
        parts = []
        for _ in range(self.rng.randint(2, 3)):
            roll = self.rng.random()
            if live and roll < 0.4:
                parts.append(self.live_atom(live))
            elif roll < 0.6 and len(names) > 1:
                a, b = self.rng.sample(names, 2)
                parts.append(Eq(a, b))
            elif roll < 0.8 and depth > 0:
                parts.append(self.formula(self.rng.choice(names), depth - 1))
            else:
                parts.append(self.unary_atom(self.rng.choice(names)))
        return self.combine(parts)

    def block(self, var, depth):
        """Quantified block over fresh variables with var free"""
        bound = tuple(self.fresh() for _ in range(self.rng.randint(1, self.max_block)))
        names = ((var,) if var is not None else ()) + bound
        matrix = self.matrix(list(names), depth)
        if isinstance(matrix, Quant):
            matrix = And((matrix, self.unary_atom(bound[0])))
        if self.counting and len(bound) == 1 and self.rng.random() < 0.4:
            kind = self.rng.choice((QuantKind.AT_LEAST, QuantKind.AT_MOST, QuantKind.EXACTLY))
            return Quant(kind, bound, matrix, self.rng.randint(0, 2))
        return Quant(self.rng.choice((QuantKind.EXISTS, QuantKind.FORALL)), bound, matrix)

    def formula(self, var, depth=None):
        """Formula whose free variables lie within {var}; a sentence when var is None"""
        depth = self.max_depth if depth is None else depth
        parts = []
        for _ in range(self.rng.randint(1, 2)):
            if var is None or (depth > 0 and self.rng.random() < 0.6):
                parts.append(self.block(var, depth))
            else:
                parts.append(self.unary_atom(var))
        return self.combine(parts)

    def normal_form_sentence(self):
        """forall x exists y.. and forall x.. conjuncts with uniform quantifier-free matrices"""
        parts = []
        for _ in range(self.rng.randint(1, 2)):
            bound = tuple(f"y{i}" for i in range(1, self.rng.randint(1, self.max_block) + 1))
            body = Quant(QuantKind.EXISTS, bound, self.matrix(['x', *bound], 0))
            parts.append(Quant(QuantKind.FORALL, ('x',), body))
        for _ in range(self.rng.randint(1, 2)):
            bound = tuple(f"x{i}" for i in range(1, self.rng.randint(1, self.max_block) + 1))
            parts.append(Quant(QuantKind.FORALL, bound, self.matrix(list(bound), 0)))
        return conj(parts)


def generate(kind, count, seed=0, max_nodes=30):
    """count members of one corpus kind, deterministic in seed"""
    if kind not in KINDS:
        raise ConfigError(f"unknown corpus kind {kind!r}")
    vocab = BINARY_VOCAB if kind == 'binary' else UF1_VOCAB
    generator = FormulaGenerator(vocab, seed)
    produced = []
    attempts = 0
    while len(produced) < count:
        attempts += 1
        if attempts > 50 * count + 100:
            raise InternalInvariantError(f"corpus generator stalled after {attempts} attempts")
        if kind == 'nf':
            phi = generator.normal_form_sentence()
        elif kind == 'binary':
            phi = generator.formula('x' if generator.rng.random() < 0.5 else None)
        else:
            phi = generator.formula(None)
        if node_count(phi) > max_nodes or not validate_fragment(phi).member:
            continue
        produced.append(phi)
    LOGGER.debug("corpus %s: %d formulas in %d attempts", kind, count, attempts)
    return produced


def corpus_frame(kind, count, seed=0, max_nodes=30):
    """Corpus listing with printed formulas and node counts"""
    rows = [{'index': i, 'formula': print_formula(phi), 'nodes': node_count(phi)}
            for i, phi in enumerate(generate(kind, count, seed, max_nodes))]
    return pd.DataFrame(rows, columns=['index', 'formula', 'nodes'])


def random_structure(rng, vocab, size, density=0.4):
    """Each fact true with probability density"""
    facts = [fact for fact in all_facts(vocab, size) if rng.random() < density]
    return Structure.from_facts(vocab, size, facts)
