import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Final

import pandas as pd
from lark import Lark, Transformer, exceptions, v_args

from .errors import EvaluationError, StructureError, Uf1Error
from .syntax import (And, Atom, Const, Eq, Not, Or, QuantKind, Vocabulary,
                     check_vocabulary, free_variables, live_variables, variable_order)

LOGGER: Final = logging.getLogger(__name__)


# ============ STRUCTURE ============

@dataclass(frozen=True)
class Structure:
    """Finite relational structure with domain {0, ..., size-1}"""

    vocab: Vocabulary
    size: int
    relations: tuple = ()

    def __post_init__(self):
        if not isinstance(self.size, int) or self.size < 1:
            raise StructureError(f"domain size must be a positive integer, got {self.size!r}")
        given = dict(self.relations)
        for name in given:
            if name not in self.vocab:
                raise StructureError(f"relation {name} is not in the vocabulary")
        relations = []
        facts = set()
        for name, arity in self.vocab.symbols:
            tuples = frozenset(tuple(t) for t in given.get(name, ()))
            for tup in tuples:
                if len(tup) != arity:
                    raise StructureError(f"tuple {tup} has length {len(tup)} but {name} has arity {arity}")
                if any(not isinstance(e, int) or e < 0 or e >= self.size for e in tup):
                    raise StructureError(f"tuple {tup} of {name} is out of bounds for domain size {self.size}")
                facts.add((name, tup))
            relations.append((name, tuples))
        object.__setattr__(self, 'relations', tuple(relations))
        object.__setattr__(self, 'facts', frozenset(facts))

    @classmethod
    def build(cls, vocab, size, mapping=None):
        return cls(vocab, size, tuple((mapping or {}).items()))

    @classmethod
    def from_facts(cls, vocab, size, facts):
        mapping = {}
        for name, tup in facts:
            mapping.setdefault(name, set()).add(tuple(tup))
        return cls.build(vocab, size, mapping)

    @property
    def domain(self):
        return range(self.size)

    def relation(self, name):
        """Tuples of one relation"""
        for rel, tuples in self.relations:
            if rel == name:
                return tuples
        raise StructureError(f"relation {name} is not in the vocabulary")

    def holds(self, name, tup):
        return (name, tuple(tup)) in self.facts

    def relations_frame(self):
        rows = [{'relation': name, 'tuple': ' '.join(map(str, tup))}
                for name, tuples in self.relations for tup in sorted(tuples)]
        return pd.DataFrame(rows, columns=['relation', 'tuple'])

    def __str__(self):
        return print_structure(self)


def all_facts(vocab, size):
    """Every (symbol, tuple) pair over the domain, in lexicographic order"""
    return [(name, tup) for name, arity in vocab.symbols for tup in product(range(size), repeat=arity)]


def enumerate_structures(vocab, size):
    """All structures of one size; exponential, meant for tiny oracles"""
    facts = all_facts(vocab, size)
    for bits in product((False, True), repeat=len(facts)):
        yield Structure.from_facts(vocab, size, (fact for fact, bit in zip(facts, bits) if bit))


def substructure(A, elements):
    """Induced substructure on elements, renumbered in the given order"""
    order = list(dict.fromkeys(elements))
    index = {element: i for i, element in enumerate(order)}
    facts = [(name, tuple(index[e] for e in tup)) for name, tup in A.facts
             if all(e in index for e in tup)]
    return Structure.from_facts(A.vocab, len(order), facts)


def relabel(A, permutation):
    """Isomorphic copy where element a becomes permutation[a]"""
    if sorted(permutation) != list(range(A.size)):
        raise StructureError("relabelling must be a permutation of the domain")
    facts = [(name, tuple(permutation[e] for e in tup)) for name, tup in A.facts]
    return Structure.from_facts(A.vocab, A.size, facts)


def disjoint_union(A, B):
    """A followed by a shifted copy of B over the merged vocabulary"""
    vocab = A.vocab.union(B.vocab)
    facts = list(A.facts) + [(name, tuple(e + A.size for e in tup)) for name, tup in B.facts]
    return Structure.from_facts(vocab, A.size + B.size, facts)


def expand(A, vocab, extra_facts=()):
    """Same domain, larger vocabulary, optional additional facts"""
    return Structure.from_facts(A.vocab.union(vocab), A.size, list(A.facts) + list(extra_facts))


def reduct(A, names):
    """Forget every relation not listed"""
    vocab = A.vocab.restrict(names)
    return Structure.from_facts(vocab, A.size, [(n, t) for n, t in A.facts if n in vocab])


# ============ FILE FORMAT ============

_STRUCTURE_GRAMMAR = r"""
    start: domain declaration*
    domain: "domain" "=" INT
    declaration: "rel"? NAME "/" INT "=" "{" tuple* "}"
    tuple: "(" INT+ ")"

    NAME: /[A-Za-z_][A-Za-z0-9_]*/
    SEPARATOR: /[;,]/
    COMMENT: /#[^\n]*/

    %import common.INT
    %import common.WS
    %ignore WS
    %ignore SEPARATOR
    %ignore COMMENT
"""

_STRUCTURE_PARSER: Final = Lark(_STRUCTURE_GRAMMAR, parser='lalr')


@v_args(inline=True)
class _StructureBuilder(Transformer):
    def start(self, size, *declarations):
        return size, declarations

    def domain(self, size):
        return int(size)

    def declaration(self, name, arity, *tuples):
        return str(name), int(arity), tuples, name.line

    def tuple(self, *elements):
        return tuple(int(e) for e in elements)


def parse_structure(text, vocab=None):
    """Parse the structure file format"""
    try:
        tree = _STRUCTURE_PARSER.parse(text)
    except exceptions.UnexpectedInput as err:
        found = getattr(err, 'token', None) or getattr(err, 'char', None) or 'end of input'
        raise StructureError(f"unexpected {found!s} at line {err.line}, column {err.column}") from None
    except exceptions.LarkError as err:
        raise StructureError(str(err)) from None
    try:
        size, declarations = _StructureBuilder().transform(tree)
    except exceptions.VisitError as err:
        if isinstance(err.orig_exc, Uf1Error):
            raise err.orig_exc from None
        raise
    symbols = []
    mapping = {}
    for name, arity, tuples, line in declarations:
        if name in mapping:
            raise StructureError(f"relation {name} declared twice (line {line})")
        if vocab is not None:
            if name not in vocab:
                raise StructureError(f"relation {name} is not in the vocabulary (line {line})")
            if vocab.arity(name) != arity:
                raise StructureError(f"{name} declared with arity {arity}, vocabulary says {vocab.arity(name)}")
        symbols.append((name, arity))
        mapping[name] = set(tuples)
    if vocab is not None:
        symbols.extend(vocab.symbols)
    return Structure.build(Vocabulary(tuple(symbols)), size, mapping)


def print_structure(A):
    """Render A in the format parse_structure reads"""
    lines = [f"domain = {A.size}"]
    for name, tuples in A.relations:
        body = ' '.join('(' + ' '.join(map(str, tup)) + ')' for tup in sorted(tuples))
        lines.append(f"rel {name}/{A.vocab.arity(name)} = {{ {body} }}" if body
                     else f"rel {name}/{A.vocab.arity(name)} = {{ }}")
    return '\n'.join(lines) + '\n'


# ============ TYPES AND TABLES ============

@lru_cache(maxsize=None)
def table_shapes(vocab, k):
    """(symbol, index tuple) pairs over 0..k-1 that use every index, lexicographic"""
    shapes = []
    for name, arity in vocab.symbols:
        if arity < k:
            continue
        for combo in product(range(k), repeat=arity):
            if len(set(combo)) == k:
                shapes.append((name, combo))
    return tuple(shapes)


@dataclass(frozen=True)
class KTable:
    """Polarity of every atom over v1..vk that uses all k variables"""

    vocab: Vocabulary
    k: int
    bits: tuple

    @property
    def shapes(self):
        return table_shapes(self.vocab, self.k)

    @property
    def sort_key(self):
        return self.bits

    def holds(self, name, combo):
        return self.bits[self.shapes.index((name, tuple(combo)))]

    def literals(self):
        for (name, combo), bit in zip(self.shapes, self.bits):
            yield Atom(name, tuple(f"v{i + 1}" for i in combo)), bit

    def to_formula(self, variables):
        """Conjunction of the literals with vi renamed to variables[i-1]"""
        parts = []
        for (name, combo), bit in zip(self.shapes, self.bits):
            atom = Atom(name, tuple(variables[i] for i in combo))
            parts.append(atom if bit else Not(atom))
        return And(tuple(parts)) if len(parts) > 1 else (parts[0] if parts else Const(True))

    def describe(self):
        return '{' + ', '.join(('' if bit else '~') + str(atom) for atom, bit in self.literals()) + '}'

    def __str__(self):
        return self.describe()


# a 1-type is a 1-table
OneType = KTable


def k_table(A, elements):
    """The table realized by pairwise distinct elements"""
    elements = tuple(elements)
    if not elements:
        raise EvaluationError("a table needs at least one element")
    if len(set(elements)) != len(elements):
        raise EvaluationError(f"table elements must be pairwise distinct, got {elements}")
    shapes = table_shapes(A.vocab, len(elements))
    return KTable(A.vocab, len(elements),
                  tuple((name, tuple(elements[i] for i in combo)) in A.facts for name, combo in shapes))


def one_type(A, a):
    """1-table of the element a"""
    if not 0 <= a < A.size:
        raise EvaluationError(f"element {a} is outside the domain")
    return k_table(A, (a,))


def all_one_types(vocab):
    """Every 1-type of the vocabulary, in bit order"""
    count = len(table_shapes(vocab, 1))
    return [KTable(vocab, 1, bits) for bits in product((False, True), repeat=count)]


def realized_types(A):
    """1-type -> elements realizing it, in order of first realization"""
    realized = {}
    for a in A.domain:
        realized.setdefault(one_type(A, a), []).append(a)
    return realized


def types_frame(A):
    """Realized 1-types with their elements and counts"""
    rows = [{'type': t.describe(), 'elements': ' '.join(map(str, elements)), 'count': len(elements)}
            for t, elements in realized_types(A).items()]
    return pd.DataFrame(rows, columns=['type', 'elements', 'count'])


# ============ EVALUATION ============

_MISSING: Final = object()


def _compile(phi):
    """Closure (facts, size, env) -> bool; env is mutated and restored"""
    if isinstance(phi, Const):
        value = phi.value
        return lambda facts, size, env: value
    if isinstance(phi, Atom):
        rel, args = phi.rel, phi.args
        return lambda facts, size, env: (rel, tuple(env[a] for a in args)) in facts
    if isinstance(phi, Eq):
        left, right = phi.left, phi.right
        return lambda facts, size, env: env[left] == env[right]
    if isinstance(phi, Not):
        body = _compile(phi.body)
        return lambda facts, size, env: not body(facts, size, env)
    if isinstance(phi, And):
        parts = [_compile(part) for part in phi.parts]
        return lambda facts, size, env: all(part(facts, size, env) for part in parts)
    if isinstance(phi, Or):
        parts = [_compile(part) for part in phi.parts]
        return lambda facts, size, env: any(part(facts, size, env) for part in parts)
    body = _compile(phi.body)
    for var in reversed(phi.vars[1:]):
        body = _quantifier(phi.kind, var, phi.count, body)
    return _quantifier(phi.kind, phi.vars[0], phi.count, body)


def _quantifier(kind, var, threshold, body):
    """Closure counting the values of var that satisfy body"""
    def run(facts, size, env):
        saved = env.get(var, _MISSING)
        hits = 0
        try:
            for element in range(size):
                env[var] = element
                if body(facts, size, env):
                    if kind is QuantKind.EXISTS:
                        return True
                    hits += 1
                    if kind is QuantKind.AT_LEAST and hits >= threshold:
                        return True
                    if kind in (QuantKind.AT_MOST, QuantKind.EXACTLY) and hits > threshold:
                        return False
                elif kind is QuantKind.FORALL:
                    return False
        finally:
            if saved is _MISSING:
                env.pop(var, None)
            else:
                env[var] = saved
        if kind is QuantKind.EXISTS:
            return False
        if kind is QuantKind.FORALL:
            return True
        if kind is QuantKind.AT_LEAST:
            return hits >= threshold
        if kind is QuantKind.AT_MOST:
            return True
        return hits == threshold

    return run


@lru_cache(maxsize=4096)
def compile_formula(phi):
    """Compiled evaluator for phi, cached per formula"""
    return _compile(phi)


def evaluate(A, phi, s=None):
    """Truth of phi in A under assignment s"""
    env = dict(s or {})
    missing = free_variables(phi) - set(env)
    if missing:
        raise EvaluationError(f"unbound free variables: {', '.join(sorted(missing))}")
    for var, element in env.items():
        if not isinstance(element, int) or not 0 <= element < A.size:
            raise EvaluationError(f"{var} is assigned {element!r}, outside the domain")
    check_vocabulary(phi, A.vocab)
    return compile_formula(phi)(A.facts, A.size, env)


def evaluate3(facts, size, phi, env=None):
    """Kleene evaluation over partial facts: True, False or None for unknown"""
    return _compile3(phi)(facts, size, dict(env or {}))


def _kleene_and(values):
    result = True
    for value in values:
        if value is False:
            return False
        if value is None:
            result = None
    return result


def _kleene_or(values):
    result = False
    for value in values:
        if value is True:
            return True
        if value is None:
            result = None
    return result


def _count_verdict(kind, threshold, definite, possible):
    """Three-valued verdict of a counting quantifier from definite and possible hits"""
    if kind is QuantKind.AT_LEAST:
        if definite >= threshold:
            return True
        return False if possible < threshold else None
    if kind is QuantKind.AT_MOST:
        if possible <= threshold:
            return True
        return False if definite > threshold else None
    if definite > threshold or possible < threshold:
        return False
    return True if definite == possible == threshold else None


@lru_cache(maxsize=4096)
def _compile3(phi):
    """Closure evaluating phi over partial facts"""
    if isinstance(phi, Const):
        value = phi.value
        return lambda facts, size, env: value
    if isinstance(phi, Atom):
        rel, args = phi.rel, phi.args
        return lambda facts, size, env: facts.get((rel, tuple(env[a] for a in args)))
    if isinstance(phi, Eq):
        left, right = phi.left, phi.right
        return lambda facts, size, env: env[left] == env[right]
    if isinstance(phi, Not):
        body = _compile3(phi.body)

        def negate(facts, size, env):
            value = body(facts, size, env)
            return None if value is None else not value

        return negate
    if isinstance(phi, And):
        parts = [_compile3(part) for part in phi.parts]
        return lambda facts, size, env: _kleene_and(part(facts, size, env) for part in parts)
    if isinstance(phi, Or):
        parts = [_compile3(part) for part in phi.parts]
        return lambda facts, size, env: _kleene_or(part(facts, size, env) for part in parts)
    body = _compile3(phi.body)
    for var in reversed(phi.vars[1:]):
        body = _quantifier3(phi.kind, var, phi.count, body)
    return _quantifier3(phi.kind, phi.vars[0], phi.count, body)


def _quantifier3(kind, var, threshold, body):
    """Three-valued counterpart of _quantifier"""
    def values(facts, size, env):
        saved = env.get(var, _MISSING)
        try:
            for element in range(size):
                env[var] = element
                yield body(facts, size, env)
        finally:
            if saved is _MISSING:
                env.pop(var, None)
            else:
                env[var] = saved

    def run(facts, size, env):
        if kind is QuantKind.EXISTS:
            return _kleene_or(values(facts, size, env))
        if kind is QuantKind.FORALL:
            return _kleene_and(values(facts, size, env))
        results = list(values(facts, size, env))
        definite = sum(1 for value in results if value is True)
        possible = definite + sum(1 for value in results if value is None)
        return _count_verdict(kind, threshold, definite, possible)

    return run


# ============ TYPE-BASED MATRIX EVALUATION ============

def equality_pattern(elements):
    """Partition of positions by equal elements, blocks ordered by first position"""
    blocks = {}
    for position, element in enumerate(elements):
        blocks.setdefault(element, []).append(position)
    return [tuple(block) for block in blocks.values()]


def evaluate_matrix_by_types(one_types, pattern, live_table, phi, variables=None):
    """Truth of a quantifier-free matrix from 1-types, equalities and the live table alone"""
    variables = tuple(variables) if variables is not None else tuple(
        v for v in variable_order(phi) if v in free_variables(phi))
    if len(one_types) != len(variables):
        raise EvaluationError(f"{len(variables)} positions but {len(one_types)} 1-types")
    block_of = {}
    for index, block in enumerate(pattern):
        for position in block:
            if position in block_of or not 0 <= position < len(variables):
                raise EvaluationError(f"equality pattern {pattern} is not a partition of the positions")
            block_of[position] = index
    if len(block_of) != len(variables):
        raise EvaluationError(f"equality pattern {pattern} does not cover every position")
    for block in pattern:
        if len({one_types[p] for p in block}) > 1:
            raise EvaluationError(f"positions {block} are equal but carry different 1-types")
    position_of = {var: i for i, var in enumerate(variables)}
    missing = free_variables(phi) - set(position_of)
    if missing:
        raise EvaluationError(f"no position for variables {', '.join(sorted(missing))}")

    live = live_variables(phi)
    live_blocks = []
    for var in variables:
        if var in live and block_of[position_of[var]] not in live_blocks:
            live_blocks.append(block_of[position_of[var]])
    live_index = {block: i for i, block in enumerate(live_blocks)}
    if len(live_blocks) >= 2:
        if live_table is None or live_table.k != len(live_blocks):
            raise EvaluationError(f"live part has {len(live_blocks)} distinct elements; "
                                  f"a matching table is required")

    def block(var):
        return block_of[position_of[var]]

    def value(node):
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Eq):
            return block(node.left) == block(node.right)
        if isinstance(node, Atom):
            blocks = {block(arg) for arg in node.args}
            if len(blocks) == 1:
                return one_types[position_of[node.args[0]]].holds(node.rel, (0,) * len(node.args))
            return live_table.holds(node.rel, tuple(live_index[block(arg)] for arg in node.args))
        if isinstance(node, Not):
            return not value(node.body)
        if isinstance(node, And):
            return all(value(part) for part in node.parts)
        if isinstance(node, Or):
            return any(value(part) for part in node.parts)
        raise EvaluationError("matrix must be quantifier-free")

    return value(phi)


def matrix_inputs(A, phi, elements, variables):
    """1-types, equality pattern and live table of a concrete tuple"""
    types = [one_type(A, e) for e in elements]
    live = live_variables(phi)
    live_elements = []
    for var, element in zip(variables, elements):
        if var in live and element not in live_elements:
            live_elements.append(element)
    table = k_table(A, live_elements) if len(live_elements) >= 2 else None
    return types, equality_pattern(elements), table
