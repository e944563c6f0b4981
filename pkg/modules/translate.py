import logging
from dataclasses import dataclass
from itertools import combinations, product
from typing import Final, Optional

from .errors import ConfigError, InternalInvariantError, TranslationError
from .normal_form import negation_normal_form
from .structures import KTable, Structure, all_facts, compile_formula, table_shapes
from .syntax import (FALSE, TRUE, And, Atom, Const, Eq, Not, Or, Quant, QuantKind,
                     block_chain, conj, disj, fold_constants, free_variables, has_counting,
                     infer_vocabulary, parse_formula, rename_all, require_member, substitute,
                     variables, walk)

LOGGER: Final = logging.getLogger(__name__)

PLACEHOLDER_PREFIX: Final = '_ph'
METHODS: Final = ('star', 'verbatim', 'hall')


# ============ TYPES ============

@dataclass(frozen=True)
class DiagramBlock:
    """exists (classes minus centre): diff & diagram on pair & unary parts per class"""

    centre: Optional[str]
    classes: tuple
    unary: tuple
    closed: frozenset
    pair: tuple = ()
    diagram: frozenset = frozenset()

    @property
    def bound(self):
        """Classes other than the centre, quantified in order"""
        return tuple(c for c in self.classes if c != self.centre)


@dataclass(frozen=True)
class TwoType:
    """1-types of both ends, the binary diagram between them, and v1 != v2"""

    first: KTable
    second: KTable
    diagram: KTable

    def to_formula(self, x, y):
        """The 2-type with v1, v2 read as x, y"""
        return conj([self.first.to_formula((x,)), self.second.to_formula((y,)),
                     self.diagram.to_formula((x, y)), Not(Eq(x, y))])

    def ray_formula(self, x, y):
        """The 2-type without the 1-type of its first end"""
        return conj([self.second.to_formula((y,)), self.diagram.to_formula((x, y)), Not(Eq(x, y))])


@dataclass(frozen=True)
class StarCentreType:
    """diff over centre and variables, one ray diagram per variable, one 1-type per vertex"""

    centre: str
    variables: tuple
    vertex_types: tuple
    rays: tuple

    @property
    def width(self):
        return len(self.variables)

    def ray_type(self, i):
        """2-type realized by the ray to the i-th variable"""
        return TwoType(self.vertex_types[0], self.vertex_types[i + 1], self.rays[i])

    def to_formula(self):
        """The star centre type as an existential formula in the centre"""
        names = (self.centre,) + self.variables
        parts = [Not(Eq(a, b)) for a, b in combinations(names, 2)]
        parts.extend(ray.to_formula((self.centre, var)) for ray, var in zip(self.rays, self.variables))
        parts.extend(alpha.to_formula((var,)) for alpha, var in zip(self.vertex_types, names))
        body = conj(parts)
        return Quant(QuantKind.EXISTS, self.variables, body) if self.variables else body


def two_types(vocab):
    """Every 2-type with distinct ends over the vocabulary"""
    ones = [KTable(vocab, 1, bits) for bits in product((False, True), repeat=len(table_shapes(vocab, 1)))]
    diagrams = [KTable(vocab, 2, bits) for bits in product((False, True), repeat=len(table_shapes(vocab, 2)))]
    return [TwoType(a, b, d) for a in ones for b in ones for d in diagrams]


def _check_binary(vocab):
    """Reject vocabularies with symbols of arity above 2"""
    if vocab.max_arity > 2:
        wide = [name for name, arity in vocab.symbols if arity > 2]
        raise TranslationError(f"relation symbols of arity above 2: {', '.join(wide)}")


# ============ BLOCK DECOMPOSITION ============

def _partitions(items):
    """Set partitions, classes listing items in input order"""

    def grow(i, labels, used):
        if i == len(items):
            yield labels
            return
        for label in range(used + 1):
            yield from grow(i + 1, labels + [label], max(used, label + 1))

    for labels in grow(0, [], 0):
        classes = {}
        for item, label in zip(items, labels):
            classes.setdefault(label, []).append(item)
        yield [tuple(members) for members in classes.values()]


def _fold_equalities(phi):
    """Equalities between merged class names, decided by name"""
    if isinstance(phi, Eq):
        return TRUE if phi.left == phi.right else FALSE
    if isinstance(phi, Not):
        return Not(_fold_equalities(phi.body))
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(_fold_equalities(part) for part in phi.parts))
    return phi


def _dnf(phi):
    """Terms of a negation-normal quantifier-free formula as literal sets"""
    if isinstance(phi, Const):
        return [frozenset()] if phi.value else []
    if isinstance(phi, Atom):
        return [frozenset({(phi, True)})]
    if isinstance(phi, Not):
        return [frozenset({(phi.body, False)})]
    if isinstance(phi, Or):
        terms = []
        for part in phi.parts:
            terms.extend(_dnf(part))
        return list(dict.fromkeys(terms))
    terms = [frozenset()]
    for part in phi.parts:
        terms = [t | u for t in terms for u in _dnf(part)
                 if not any((atom, not polarity) in t for atom, polarity in u)]
    return list(dict.fromkeys(terms))


class _Placeholders:
    """Fresh unary or nullary atoms standing for the sub-blocks of one block"""

    def __init__(self, avoid):
        self.avoid = set(avoid)
        self.bodies = {}
        self.variables = {}
        self._next = 0

    def replace(self, node):
        """Swap every sub-block of a Boolean skeleton for a placeholder atom"""
        if isinstance(node, Quant):
            free = sorted(free_variables(node))
            while f"{PLACEHOLDER_PREFIX}{self._next}" in self.avoid:
                self._next += 1
            name = f"{PLACEHOLDER_PREFIX}{self._next}"
            self._next += 1
            self.bodies[name] = node
            self.variables[name] = free[0] if free else None
            return Atom(name, tuple(free))
        if isinstance(node, Not):
            return Not(self.replace(node.body))
        if isinstance(node, (And, Or)):
            return type(node)(tuple(self.replace(part) for part in node.parts))
        return node


def _existential(node):
    """Chain variables and matrix of a block, universal blocks read as negated existentials"""
    bound, matrix, _ = block_chain(node)
    if node.kind is QuantKind.FORALL:
        return bound, Not(matrix), True
    if node.kind.is_counting:
        raise TranslationError("counting quantifiers are outside UF1=")
    return bound, matrix, False


def decompose_block(bound, matrix, centre, placeholders):
    """Diagram blocks whose disjunction is equivalent to exists bound . matrix"""
    reduced = negation_normal_form(placeholders.replace(matrix))
    items = ([centre] if centre is not None else []) + list(bound)
    blocks = []
    for partition in _partitions(items):
        representative = {member: members[0] for members in partition for member in members}
        classes = tuple(members[0] for members in partition)
        body = fold_constants(_fold_equalities(substitute(reduced, representative)))
        for term in _dnf(negation_normal_form(body)):
            unary = {c: set() for c in classes}
            closed = set()
            binary = set()
            for atom, polarity in term:
                names = set(atom.args)
                if not names:
                    closed.add((atom, polarity))
                elif len(names) == 1:
                    unary[atom.args[0]].add((atom, polarity))
                else:
                    binary.add((atom, polarity))
            pairs = {frozenset(atom.args) for atom, _ in binary}
            if len(pairs) > 1:
                raise InternalInvariantError("binary literals of one block span several pairs")
            pair = ()
            if pairs:
                members = next(iter(pairs))
                pair = tuple(c for c in classes if c in members)
            blocks.append(DiagramBlock(centre, classes, tuple(frozenset(unary[c]) for c in classes),
                                       frozenset(closed), pair, frozenset(binary)))
    return blocks


def _complete_diagrams(block, vocab):
    """Blocks with the pair's binary literals completed over every binary symbol"""
    if not block.pair:
        return [block]
    u, w = block.pair
    fixed = {atom: polarity for atom, polarity in block.diagram}
    atoms_needed = [Atom(name, args) for name, arity in vocab.symbols if arity == 2
                    for args in ((u, w), (w, u))]
    open_atoms = [atom for atom in atoms_needed if atom not in fixed]
    completed = []
    for bits in product((False, True), repeat=len(open_atoms)):
        literals = set(block.diagram) | set(zip(open_atoms, bits))
        completed.append(DiagramBlock(block.centre, block.classes, block.unary, block.closed,
                                      block.pair, frozenset(literals)))
    return completed


def _literal(atom, polarity):
    """atom or its negation"""
    return atom if polarity else Not(atom)


def _sorted_literals(literals):
    """Deterministic order by symbol, arguments, polarity"""
    return sorted(literals, key=lambda item: (item[0].rel, item[0].args, item[1]))


# ============ DIAGRAM NORMAL FORM ============

class _DiagramNormalizer:
    """Rewrites every block as a disjunction of diagram blocks with completed diagrams"""

    def __init__(self, vocab, avoid):
        self.vocab = vocab
        self.avoid = avoid

    def normalize(self, node):
        """Normalize node, universal blocks as negated existentials"""
        if isinstance(node, Not):
            return Not(self.normalize(node.body))
        if isinstance(node, (And, Or)):
            return type(node)(tuple(self.normalize(part) for part in node.parts))
        if not isinstance(node, Quant):
            return node
        bound, matrix, negated = _existential(node)
        free = sorted(free_variables(node))
        if free:
            result = self.block(bound, matrix, free[0])
        else:
            live = sorted({a for atom in walk(matrix) if isinstance(atom, Atom)
                           for a in atom.args if len(set(atom.args)) > 1} & set(bound))
            centre = live[0] if live else bound[0]
            rest = tuple(v for v in bound if v != centre)
            inner = self.block(rest, matrix, centre)
            result = Quant(QuantKind.EXISTS, (centre,), inner)
        return Not(result) if negated else result

    def block(self, bound, matrix, centre):
        """Disjunction of the completed diagram blocks of one block"""
        placeholders = _Placeholders(self.avoid)
        disjuncts = []
        for block in decompose_block(bound, matrix, centre, placeholders):
            for full in _complete_diagrams(block, self.vocab):
                disjuncts.append(self.assemble(full, placeholders))
        return disj(disjuncts)

    def literal_formula(self, atom, polarity, placeholders, at):
        """A literal, with placeholders replaced by their normalized blocks at the variable at"""
        if atom.rel in placeholders.bodies:
            inner = self.normalize(placeholders.bodies[atom.rel])
            var = placeholders.variables[atom.rel]
            if var is not None:
                inner = substitute(inner, {var: at})
            return _literal(inner, polarity)
        return _literal(atom, polarity)

    def assemble(self, block, placeholders):
        """exists bound . diff, diagram and unary parts"""
        parts = [Not(Eq(a, b)) for a, b in combinations(block.classes, 2)]
        parts.extend(_literal(atom, polarity) for atom, polarity in _sorted_literals(block.diagram))
        for name, literals in zip(block.classes, block.unary):
            parts.extend(self.literal_formula(atom, polarity, placeholders, name)
                         for atom, polarity in _sorted_literals(literals))
        parts.extend(self.literal_formula(atom, polarity, placeholders, None)
                     for atom, polarity in _sorted_literals(block.closed))
        body = conj(parts)
        return Quant(QuantKind.EXISTS, block.bound, body) if block.bound else body


def to_diagram_normal_form(phi, vocab=None):
    """Equivalent formula whose positive blocks are diagram blocks"""
    require_member(phi)
    vocab = infer_vocabulary(phi, vocab)
    _check_binary(vocab)
    result = _DiagramNormalizer(vocab, set(vocab.names)).normalize(phi)
    LOGGER.debug("diagram normal form: %s", result)
    return result


# ============ FOC2 TRANSLATION ============

def _at(formula, var):
    """A formula in x, restated for the variable var in {x, y}"""
    return formula if var == 'x' else rename_all(formula, {'x': 'y', 'y': 'x'})


def _at_least(threshold, body):
    """At least threshold values of y satisfy body"""
    return Quant(QuantKind.AT_LEAST, ('y',), body, threshold)


def _star_formula(block, root):
    """Rays of the block around root with the other classes' literals, placeholders as unary atoms"""
    bound = tuple(c for c in block.classes if c != root)
    parts = [Not(Eq(a, b)) for a, b in combinations((root,) + bound, 2)]
    parts.extend(_literal(atom, polarity) for atom, polarity in _sorted_literals(block.diagram))
    for name, literals in zip(block.classes, block.unary):
        if name != root:
            parts.extend(_literal(atom, polarity) for atom, polarity in _sorted_literals(literals))
    body = conj(parts)
    return Quant(QuantKind.EXISTS, bound, body) if bound else body


def _fill(phi, fills):
    """Swap placeholder atoms for their translations, read at the atom's variable"""
    if isinstance(phi, Atom):
        return _at(fills[phi.rel], phi.args[0]) if phi.rel in fills else phi
    if isinstance(phi, Not):
        return Not(_fill(phi.body, fills))
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(_fill(part, fills) for part in phi.parts))
    if isinstance(phi, Quant):
        return Quant(phi.kind, phi.vars, _fill(phi.body, fills), phi.count)
    return phi


class _Foc2Translator:
    """Block-by-block translation into the variables x and y"""

    def __init__(self, avoid, method='star'):
        self.avoid = avoid
        self.method = method

    def translate(self, node, var):
        """Two-variable formula in x equivalent to node with var read as x"""
        if isinstance(node, Const):
            return node
        if isinstance(node, Atom):
            if set(node.args) != {var}:
                raise InternalInvariantError(f"atom {node} escapes its block")
            return Atom(node.rel, ('x',) * len(node.args))
        if isinstance(node, Eq):
            return TRUE
        if isinstance(node, Not):
            return Not(self.translate(node.body, var))
        if isinstance(node, (And, Or)):
            return type(node)(tuple(self.translate(part, var) for part in node.parts))
        bound, matrix, negated = _existential(node)
        free = sorted(free_variables(node))
        centre = free[0] if free else None
        placeholders = _Placeholders(self.avoid)
        blocks = decompose_block(bound, matrix, centre, placeholders)
        # sub-blocks translated first, free variable read as x
        fills = {name: self.translate(body, placeholders.variables[name])
                 for name, body in placeholders.bodies.items() if placeholders.variables[name] is not None}
        pieces = [self.piece(block, placeholders, fills) for block in blocks]
        result = fold_constants(disj(pieces))
        return Not(result) if negated else result

    def piece(self, block, placeholders, fills):
        """One diagram block as a formula in x"""
        if self.method == 'hall':
            return self.hall_piece(block, placeholders)
        closed = self.unary(block.closed, placeholders, 'x')
        if block.centre is None:
            root = block.pair[0] if block.pair else block.classes[0]
            return conj([closed, Quant(QuantKind.EXISTS, ('x',), self.star(block, root, placeholders, fills))])
        if not block.pair or block.centre in block.pair:
            return conj([closed, self.star(block, block.centre, placeholders, fills)])
        if self.method == 'verbatim' or len(block.classes) == 3:
            return conj([closed, self.borrowed_centre(block, placeholders, fills)])
        # a further class could be witnessed by the centre itself
        return self.hall_piece(block, placeholders)

    def star(self, block, root, placeholders, fills):
        """Literals of root plus a disjunction of ray counts over the star centre types around it"""
        own = self.unary(block.unary[block.classes.index(root)], placeholders, 'x')
        formula = _star_formula(block, root)
        if isinstance(formula, Const):
            return conj([own, formula])
        # the centre 1-type does not depend on y, so each count is read without it
        rays = dict.fromkeys(_fill(_star_counts(sct, centre=False), fills)
                             for sct in expand_star_centre(formula))
        return conj([own, disj(list(rays))])

    def borrowed_centre(self, block, placeholders, fills):
        """Off-centre pair: some u with its own star, the centre not being its only partner"""
        u, w = block.pair
        unary = {c: literals for c, literals in zip(block.classes, block.unary)}
        around_u = _at(self.star(block, u, placeholders, fills), 'y')
        partner = conj([self.diagram(block, ('y', 'x')), self.unary(unary[w], placeholders, 'x')])
        spare = Quant(QuantKind.AT_LEAST, ('x',), conj([Not(Eq('y', 'x')), partner]), 2)
        return conj([self.unary(unary[block.centre], placeholders, 'x'),
                     Quant(QuantKind.EXISTS, ('y',), conj([Not(Eq('y', 'x')), around_u,
                                                           disj([Not(partner), spare])]))])

    # unary parts
    def unary(self, literals, placeholders, at):
        """Unary and closed literals restated at the variable at"""
        parts = []
        for atom, polarity in _sorted_literals(literals):
            if atom.rel in placeholders.bodies:
                inner = self.translate(placeholders.bodies[atom.rel], placeholders.variables[atom.rel])
                parts.append(_literal(_at(inner, at) if atom.args else inner, polarity))
            else:
                parts.append(_literal(Atom(atom.rel, (at,) * len(atom.args)), polarity))
        return conj(parts)

    def diagram(self, block, ends):
        """Binary literals of the pair with its classes read as the given variables"""
        rename = dict(zip(block.pair, ends))
        return conj([_literal(Atom(atom.rel, tuple(rename[a] for a in atom.args)), polarity)
                     for atom, polarity in _sorted_literals(block.diagram)])

    def hall(self, classes, rho, exclude, taken=()):
        """Distinct representatives exist iff every union of candidate sets is large enough"""
        parts = []
        for size in range(1, len(classes) + 1):
            for chosen in combinations(classes, size):
                body = disj([rho[c] for c in chosen])
                if exclude:
                    body = conj([Not(Eq('y', 'x')), body])
                used = sum(1 for members in taken if members & set(chosen))
                parts.append(_at_least(size + used, body))
        return parts

    def hall_piece(self, block, placeholders):
        """One diagram block through candidate sets and the marriage condition"""
        unary = {c: literals for c, literals in zip(block.classes, block.unary)}
        parts = [self.unary(block.closed, placeholders, 'x')]
        centre = block.centre
        others = [c for c in block.classes if c != centre]
        if centre is not None:
            parts.append(self.unary(unary[centre], placeholders, 'x'))
        if not block.pair:
            rho = {c: self.unary(unary[c], placeholders, 'y') for c in others}
            parts.extend(self.hall(others, rho, centre is not None))
        elif centre in block.pair:
            partner = block.pair[1] if block.pair[0] == centre else block.pair[0]
            ends = ('x', 'y') if block.pair[0] == centre else ('y', 'x')
            rho = {c: self.unary(unary[c], placeholders, 'y') for c in others}
            rho[partner] = conj([rho[partner], self.diagram(block, ends)])
            parts.extend(self.hall(others, rho, True))
        else:
            parts.append(self.off_centre(block, unary, placeholders, others, centre is not None))
        return conj(parts)

    @staticmethod
    def refine(lam, head, rest, members, at):
        """Unary part of head plus the membership pattern over the remaining classes"""
        return conj([lam[(head, at)]] + [lam[(c, at)] if c in members else Not(lam[(c, at)]) for c in rest])

    def off_centre(self, block, unary, placeholders, others, exclude):
        """Pair of non-centre classes carrying the diagram, plus representatives for the rest"""
        u, w = block.pair
        rest = [c for c in others if c not in block.pair]
        lam = {(c, at): self.unary(unary[c], placeholders, at) for c in others for at in ('x', 'y')}
        rho = {c: lam[(c, 'y')] for c in rest}
        options = []
        for sigma_u in product((False, True), repeat=len(rest)):
            for sigma_w in product((False, True), repeat=len(rest)):
                member_u = frozenset(c for c, bit in zip(rest, sigma_u) if bit)
                member_w = frozenset(c for c, bit in zip(rest, sigma_w) if bit)
                partner = conj([Not(Eq('y', 'x')), self.refine(lam, w, rest, member_w, 'x'),
                                self.diagram(block, ('y', 'x'))])
                head = self.refine(lam, u, rest, member_u, 'y')
                if exclude:
                    # some partner must differ from the centre
                    pair = Quant(QuantKind.EXISTS, ('y',), conj([
                        Not(Eq('y', 'x')), head, Quant(QuantKind.EXISTS, ('x',), partner),
                        disj([Not(partner), Quant(QuantKind.AT_LEAST, ('x',), partner, 2)])]))
                else:
                    pair = Quant(QuantKind.EXISTS, ('y',), conj([head, Quant(QuantKind.EXISTS, ('x',), partner)]))
                options.append(conj([pair] + self.hall(rest, rho, exclude, (member_u, member_w))))
        return disj(options)


def _vocabulary_for(phi, vocab):
    """Vocabulary of phi over vocab, arity at most 2"""
    vocab = infer_vocabulary(phi, vocab)
    _check_binary(vocab)
    return vocab


def _restate(result, var):
    """Rename the working variables so the free variable keeps its input name"""
    if var is None or var == 'x':
        return result
    if var == 'y':
        return rename_all(result, {'x': 'y', 'y': 'x'})
    return rename_all(result, {'x': var})


def to_foc2(phi, vocab=None, method='star'):
    """Equivalent two-variable counting formula for a UF1= formula over arity <= 2

    method 'star' reads every block through its star centre types and uses the
    borrowed-centre formula for off-centre pairs whenever the block has no further
    classes. 'verbatim' uses the borrowed-centre formula for every off-centre pair
    and can disagree with phi once a further class is present; 'hall' builds every
    block from candidate sets and the marriage condition.
    """
    if method not in METHODS:
        raise ConfigError(f"unknown translation method {method!r}, expected one of {', '.join(METHODS)}")
    if has_counting(phi):
        raise TranslationError("input must not contain counting quantifiers")
    require_member(phi)
    vocab = _vocabulary_for(phi, vocab)
    free = sorted(free_variables(phi))
    if len(free) > 1:
        raise TranslationError(f"at most one free variable allowed, got {', '.join(free)}")
    var = free[0] if free else None
    result = fold_constants(_Foc2Translator(set(vocab.names), method).translate(phi, var))
    if not variables(result) <= {'x', 'y'}:
        raise InternalInvariantError(f"translation uses variables {sorted(variables(result))}")
    if any(isinstance(node, Atom) and node.rel.startswith(PLACEHOLDER_PREFIX) and node.rel not in vocab
           for node in walk(result)):
        raise InternalInvariantError("placeholder survived the translation")
    LOGGER.debug("%s translation: %d nodes", method, sum(1 for _ in walk(result)))
    return _restate(result, var)


# ============ STAR CENTRE TYPES ============

def _star_parts(formula):
    """Centre, bound variables and conjuncts of a star centre formula"""
    free = sorted(free_variables(formula))
    if len(free) != 1:
        raise TranslationError("a star centre formula has exactly one free variable")
    centre = free[0]
    if isinstance(formula, Quant):
        if formula.kind is not QuantKind.EXISTS:
            raise TranslationError("a star centre formula is existentially quantified")
        bound, body, _ = block_chain(formula)
    else:
        bound, body = (), formula
    items = body.parts if isinstance(body, And) else (body,)
    return centre, tuple(bound), items


def expand_star_centre(formula, vocab=None):
    """Star centre types whose disjunction is equivalent to a star centre formula"""
    vocab = _vocabulary_for(formula, vocab)
    centre, bound, items = _star_parts(formula)
    names = (centre,) + bound
    distinct = set()
    fixed = {}
    for item in items:
        if isinstance(item, Const) and item.value:
            continue
        if isinstance(item, Not) and isinstance(item.body, Eq):
            distinct.add(frozenset((item.body.left, item.body.right)))
            continue
        atom, polarity = (item.body, False) if isinstance(item, Not) else (item, True)
        if not isinstance(atom, Atom):
            raise TranslationError(f"{item} is not a literal")
        if not set(atom.args) <= set(names):
            raise TranslationError(f"{atom} mentions a variable outside the star")
        if len(set(atom.args)) > 1 and centre not in atom.args:
            raise TranslationError(f"binary literal {atom} does not touch the centre {centre}")
        if fixed.get(atom, polarity) != polarity:
            LOGGER.debug("contradictory literal %s: empty expansion", atom)
            return []
        fixed[atom] = polarity
    for a, b in combinations(names, 2):
        if frozenset((a, b)) not in distinct:
            raise TranslationError(f"missing inequality {a}!={b}")

    one_shapes = table_shapes(vocab, 1)
    two_shapes = table_shapes(vocab, 2)

    def options(shapes, ends):
        slots = [Atom(name, tuple(ends[i] for i in combo)) for name, combo in shapes]
        free_slots = [i for i, atom in enumerate(slots) if atom not in fixed]
        result = []
        for bits in product((False, True), repeat=len(free_slots)):
            chosen = [fixed.get(atom) for atom in slots]
            for i, bit in zip(free_slots, bits):
                chosen[i] = bit
            result.append(tuple(chosen))
        return result

    vertex_options = [[KTable(vocab, 1, bits) for bits in options(one_shapes, (v,))] for v in names]
    ray_options = [[KTable(vocab, 2, bits) for bits in options(two_shapes, (centre, v))] for v in bound]
    expansion = []
    for vertex_types in product(*vertex_options):
        for rays in product(*ray_options):
            expansion.append(StarCentreType(centre, bound, tuple(vertex_types), tuple(rays)))
    return expansion


def star_expansion_formula(expansion):
    """Disjunction of the star centre types of an expansion"""
    return disj([sct.to_formula() for sct in expansion])


def _star_counts(sct, centre=True):
    """At-least counts of each ray 2-type, centre read as x and its 1-type kept when centre is set"""
    counts = {}
    for i in range(sct.width):
        two = sct.ray_type(i)
        counts[two] = counts.get(two, 0) + 1
    parts = [sct.vertex_types[0].to_formula(('x',))] if centre else []
    for two, number in counts.items():
        body = two.to_formula('x', 'y') if centre else two.ray_formula('x', 'y')
        parts.append(_at_least(number, body))
    return conj(parts)


def star_centre_to_foc2(sct):
    """Centre 1-type plus at-least counts of each ray 2-type"""
    return _restate(_star_counts(sct), sct.centre)


# ============ ORACLE AND CORPUS ============

@dataclass(frozen=True)
class OracleVerdict:
    equivalent: bool
    max_size: int
    checked: int
    counterexample: Optional[Structure] = None
    assignment: Optional[dict] = None

    @property
    def verdict(self):
        """equivalent or counterexample"""
        return 'equivalent' if self.equivalent else 'counterexample'


def equivalence_oracle(f, g, max_size, vocab=None):
    """Compare f and g on every structure and assignment up to max_size"""
    vocab = infer_vocabulary(g, infer_vocabulary(f, vocab))
    free = sorted(free_variables(f) | free_variables(g))
    run_f, run_g = compile_formula(f), compile_formula(g)
    checked = 0
    for size in range(1, max_size + 1):
        facts = all_facts(vocab, size)
        for bits in product((False, True), repeat=len(facts)):
            true = frozenset(fact for fact, bit in zip(facts, bits) if bit)
            for values in product(range(size), repeat=len(free)):
                env = dict(zip(free, values))
                checked += 1
                if run_f(true, size, dict(env)) != run_g(true, size, dict(env)):
                    witness = Structure.from_facts(vocab, size, true)
                    LOGGER.warning("formulas differ on a structure of size %d under %s", size, env)
                    return OracleVerdict(False, max_size, checked, witness, env)
    return OracleVerdict(True, max_size, checked)


def incomparability_corpus():
    """Witnesses that UF1= and FOC2 are incomparable"""
    return [
        (parse_formula("E x y z. R(x,y,z)"), "UF1= sentence with no FOC2 equivalent"),
        (parse_formula("A x. E[<=1] y. R(y,x)"), "FOC2 axiom: in-degree at most one"),
        (parse_formula("(A x. E[<=1] y. R(y,x)) & (A x. E y. R(x,y)) & (E x. A y. ~R(y,x))"),
         "infinity axiom: satisfiable, but only by infinite structures"),
    ]
