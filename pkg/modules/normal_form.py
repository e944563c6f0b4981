import logging
from dataclasses import dataclass, field
from itertools import count
from typing import Final

from .errors import FragmentError, InternalInvariantError
from .structures import evaluate, expand, reduct
from .syntax import (FALSE, And, Atom, Const, Eq, Not, Or, Quant, QuantKind, Vocabulary,
                     conj, disj, formula_size, free_variables, has_counting, infer_vocabulary,
                     live_variables, print_formula, require_member, standardize_apart, substitute,
                     validate_fragment)

LOGGER: Final = logging.getLogger(__name__)

FRESH_PREFIX: Final = '_nf'


# ============ PREPROCESSING ============

def _flatten(cls, parts):
    """Splice nested cls nodes into one level"""
    flat = []
    for part in parts:
        if isinstance(part, cls):
            flat.extend(part.parts)
        else:
            flat.append(part)
    return flat


def negation_normal_form(phi, negate=False):
    """Push negations down to atoms and equalities; counting thresholds are flipped"""
    if isinstance(phi, Const):
        return Const(phi.value != negate)
    if isinstance(phi, (Atom, Eq)):
        return Not(phi) if negate else phi
    if isinstance(phi, Not):
        return negation_normal_form(phi.body, not negate)
    if isinstance(phi, (And, Or)):
        cls = And if isinstance(phi, And) != negate else Or
        parts = _flatten(cls, [negation_normal_form(part, negate) for part in phi.parts])
        return conj(parts) if cls is And else disj(parts)
    if not negate:
        return Quant(phi.kind, phi.vars, negation_normal_form(phi.body), phi.count)
    if phi.kind is QuantKind.EXISTS:
        return Quant(QuantKind.FORALL, phi.vars, negation_normal_form(phi.body, True))
    if phi.kind is QuantKind.FORALL:
        return Quant(QuantKind.EXISTS, phi.vars, negation_normal_form(phi.body, True))
    body = negation_normal_form(phi.body)
    var, k = phi.vars[0], phi.count
    if phi.kind is QuantKind.AT_LEAST:
        return FALSE if k == 0 else Quant(QuantKind.AT_MOST, (var,), body, k - 1)
    if phi.kind is QuantKind.AT_MOST:
        return Quant(QuantKind.AT_LEAST, (var,), body, k + 1)
    above = Quant(QuantKind.AT_LEAST, (var,), body, k + 1)
    if k == 0:
        return Quant(QuantKind.AT_LEAST, (var,), body, 1)
    return Or((Quant(QuantKind.AT_MOST, (var,), body, k - 1), above))


def merge_blocks(phi):
    """Collapse directly nested plain quantifiers of the same kind into one block"""
    if isinstance(phi, Not):
        return Not(merge_blocks(phi.body))
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(merge_blocks(part) for part in phi.parts))
    if not isinstance(phi, Quant):
        return phi
    body = merge_blocks(phi.body)
    if (not phi.kind.is_counting and isinstance(body, Quant) and body.kind is phi.kind
            and not set(body.vars) & set(phi.vars)):
        return Quant(phi.kind, phi.vars + body.vars, body.body)
    return Quant(phi.kind, phi.vars, body, phi.count)


# ============ NORMAL FORM ============

@dataclass(frozen=True)
class ExistsConjunct:
    """forall x exists y1..yk matrix"""

    width: int
    matrix: object
    live: frozenset

    @property
    def variables(self):
        return ('x',) + tuple(f"y{i}" for i in range(1, self.width + 1))

    def to_formula(self):
        return Quant(QuantKind.FORALL, ('x',), Quant(QuantKind.EXISTS, self.variables[1:], self.matrix))


@dataclass(frozen=True)
class ForallConjunct:
    """forall x1..xl matrix"""

    width: int
    matrix: object
    live: frozenset

    @property
    def variables(self):
        return tuple(f"x{i}" for i in range(1, self.width + 1))

    def to_formula(self):
        return Quant(QuantKind.FORALL, self.variables, self.matrix)


TRIVIAL_EXISTS: Final = ExistsConjunct(1, Eq('y1', 'x'), frozenset())
TRIVIAL_FORALL: Final = ForallConjunct(1, Eq('x1', 'x1'), frozenset())


@dataclass(frozen=True)
class NormalForm:
    exist_conjuncts: tuple
    univ_conjuncts: tuple
    fresh_symbols: tuple
    vocab: Vocabulary
    definitions: tuple = field(default=(), compare=False)

    @property
    def m_exists(self):
        return len(self.exist_conjuncts)

    @property
    def m_forall(self):
        return len(self.univ_conjuncts)

    @property
    def width(self):
        widths = [c.width + 1 for c in self.exist_conjuncts] + [c.width for c in self.univ_conjuncts]
        return max(widths + [2])

    def to_formula(self):
        return And(tuple(c.to_formula() for c in self.exist_conjuncts + self.univ_conjuncts))

    @property
    def size(self):
        """Symbol count of the printed normal form"""
        return formula_size(self.to_formula())

    @property
    def original_vocab(self):
        """Vocabulary without the fresh markers"""
        return self.vocab.restrict(n for n in self.vocab.names if n not in self.fresh_symbols)

    def __str__(self):
        return print_formula(self.to_formula())


class _NormalFormBuilder:
    """Collects conjuncts and fresh markers while blocks are reduced innermost first"""

    def __init__(self, vocab):
        self.vocab = vocab
        self.exists = []
        self.foralls = []
        self.fresh = []
        self.definitions = []
        self._counter = count()

    def fresh_symbol(self):
        """Unused unary marker name"""
        while True:
            name = f"{FRESH_PREFIX}{next(self._counter)}"
            if name not in self.vocab:
                self.fresh.append(name)
                return name

    def add_exists(self, centre, bound, matrix):
        """Record forall x exists y1..yk with the centre renamed to x"""
        mapping = {var: f"y{i}" for i, var in enumerate(bound, 1)}
        mapping[centre] = 'x'
        matrix = substitute(matrix, mapping)
        self.exists.append(ExistsConjunct(len(bound), matrix, live_variables(matrix)))

    def add_forall(self, bound, matrix):
        """Record forall x1..xl"""
        matrix = substitute(matrix, {var: f"x{i}" for i, var in enumerate(bound, 1)})
        self.foralls.append(ForallConjunct(len(bound), matrix, live_variables(matrix)))

    def reduce(self, node, scope_var):
        """Replace every block inside a Boolean skeleton by a fresh unary marker"""
        if isinstance(node, (And, Or)):
            return type(node)(tuple(self.reduce(part, scope_var) for part in node.parts))
        if not isinstance(node, Quant):
            return node
        free = sorted(free_variables(node))
        inner_scope = free[0] if free else node.vars[0]
        body = self.reduce(node.body, inner_scope)
        centre = free[0] if free else scope_var
        marker = self.fresh_symbol()
        self.definitions.append((marker, free[0] if free else None, node))
        guard = Not(Atom(marker, (centre,)))
        if node.kind is QuantKind.EXISTS:
            self.add_exists(centre, node.vars, disj([guard, body]))
        else:
            self.add_forall((centre,) + node.vars, disj([guard, body]))
        if not free:
            # marker of a sentence block is constant over the domain
            self.add_forall(('u', 'w'), Or((Not(Atom(marker, ('u',))), Atom(marker, ('w',)))))
        LOGGER.debug("block %s replaced by %s(%s)", print_formula(node), marker, centre)
        return Atom(marker, (centre,))

    def top(self, item):
        """Add one conjunct of the top-level sentence"""
        if isinstance(item, Const):
            if not item.value:
                self.add_forall(('u',), FALSE)
            return
        if isinstance(item, Quant) and not free_variables(item):
            if item.kind is QuantKind.FORALL:
                body = item.body
                if (len(item.vars) == 1 and isinstance(body, Quant) and body.kind is QuantKind.EXISTS):
                    centre = item.vars[0]
                    self.add_exists(centre, body.vars, self.reduce(body.body, centre))
                else:
                    self.add_forall(item.vars, self.reduce(body, item.vars[0]))
            else:
                self.add_exists('_centre', item.vars, self.reduce(item.body, item.vars[0]))
            return
        self.add_forall(('u',), self.reduce(item, 'u'))

    def result(self):
        """The normal form, trivial conjuncts standing in for empty families"""
        exists = tuple(self.exists) or (TRIVIAL_EXISTS,)
        foralls = tuple(self.foralls) or (TRIVIAL_FORALL,)
        vocab = self.vocab.union(Vocabulary(tuple((name, 1) for name in self.fresh)))
        return NormalForm(exists, foralls, tuple(self.fresh), vocab, tuple(self.definitions))


def to_normal_form(phi, vocab=None):
    """Domain-preserving equisatisfiable normal form of a UF1= sentence"""
    if has_counting(phi):
        raise FragmentError("normal forms are only defined for formulas without counting quantifiers")
    if free_variables(phi):
        raise FragmentError(f"formula has free variables: {', '.join(sorted(free_variables(phi)))}")
    require_member(phi)
    vocab = infer_vocabulary(phi, vocab)
    prepared = merge_blocks(negation_normal_form(standardize_apart(phi, prefix='v')))
    builder = _NormalFormBuilder(vocab)
    items = prepared.parts if isinstance(prepared, And) else (prepared,)
    for item in items:
        builder.top(item)
    nf = builder.result()
    report = validate_fragment(nf.to_formula())
    if not report.member:
        raise InternalInvariantError(f"normal form left the fragment: {report.violations[0].detail}")
    LOGGER.info("normal form: m_exists=%d m_forall=%d width=%d size=%d fresh=%d",
                nf.m_exists, nf.m_forall, nf.width, nf.size, len(nf.fresh_symbols))
    return nf


def size_budget(phi):
    """Regression ceiling on the printed size of a normal form"""
    return 10 * max(formula_size(phi), 2) ** 2


def project_model(A, nf):
    """Drop the fresh marker relations from a model of the normal form"""
    return reduct(A, nf.original_vocab.names)


def expand_model(A, nf):
    """Interpret every fresh marker by the truth of the block it replaced"""
    facts = []
    for marker, centre, block in nf.definitions:
        if centre is None:
            holds = evaluate(A, block)
            facts.extend((marker, (a,)) for a in A.domain if holds)
        else:
            facts.extend((marker, (a,)) for a in A.domain if evaluate(A, block, {centre: a}))
    return expand(A, nf.vocab, facts)
