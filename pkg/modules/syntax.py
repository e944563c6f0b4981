import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import count
from typing import Final, Iterable, Iterator, Optional, Union

import pandas as pd
from lark import Lark, Transformer, exceptions, v_args

from .errors import FormulaSyntaxError, FragmentError, Uf1Error, VocabularyError

LOGGER: Final = logging.getLogger(__name__)


# ============ VOCABULARY ============

@dataclass(frozen=True)
class Vocabulary:
    """Relation symbols with their arities; equality is built in"""

    symbols: tuple = ()

    def __post_init__(self):
        items = self.symbols.items() if isinstance(self.symbols, dict) else self.symbols
        arities = {}
        for name, arity in items:
            if not isinstance(arity, int) or arity < 1:
                raise VocabularyError(f"arity of {name} must be a positive integer, got {arity!r}")
            if arities.get(name, arity) != arity:
                raise VocabularyError(f"{name} declared with arities {arities[name]} and {arity}")
            arities[name] = arity
        object.__setattr__(self, 'symbols', tuple(sorted(arities.items())))
        object.__setattr__(self, '_arities', arities)

    @classmethod
    def of(cls, **arities):
        return cls(tuple(arities.items()))

    def __contains__(self, name):
        return name in self._arities

    def __iter__(self):
        return iter(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def arity(self, name):
        """Arity of a symbol"""
        try:
            return self._arities[name]
        except KeyError:
            raise VocabularyError(f"unknown relation symbol {name}") from None

    @property
    def names(self):
        return tuple(name for name, _ in self.symbols)

    @property
    def max_arity(self):
        return max((arity for _, arity in self.symbols), default=0)

    def union(self, other):
        """Merge two vocabularies, rejecting arity clashes"""
        return Vocabulary(self.symbols + tuple(other.symbols))

    def restrict(self, names):
        keep = set(names)
        return Vocabulary(tuple(item for item in self.symbols if item[0] in keep))

    def __str__(self):
        return ', '.join(f"{name}/{arity}" for name, arity in self.symbols)


def parse_vocabulary(text):
    """Parse a list like 'R/3, E/1'"""
    items = []
    for chunk in text.replace(';', ',').split(','):
        chunk = chunk.strip()
        if not chunk:
            continue
        name, _, arity = chunk.partition('/')
        if not arity.strip().isdigit():
            raise VocabularyError(f"expected NAME/ARITY, got {chunk!r}")
        items.append((name.strip(), int(arity)))
    return Vocabulary(tuple(items))


# ============ AST ============

class QuantKind(Enum):
    EXISTS = 'E'
    FORALL = 'A'
    AT_LEAST = '>='
    AT_MOST = '<='
    EXACTLY = '='

    @property
    def is_counting(self):
        return self in (QuantKind.AT_LEAST, QuantKind.AT_MOST, QuantKind.EXACTLY)

    @property
    def family(self):
        """Blocks are chains of quantifiers from one family"""
        return 'forall' if self is QuantKind.FORALL else 'exists'


@dataclass(frozen=True)
class Const:
    value: bool

    def __str__(self):
        return print_formula(self)


@dataclass(frozen=True)
class Atom:
    rel: str
    args: tuple

    def __str__(self):
        return print_formula(self)


@dataclass(frozen=True)
class Eq:
    left: str
    right: str

    def __str__(self):
        return print_formula(self)


@dataclass(frozen=True)
class Not:
    body: 'Formula'

    def __str__(self):
        return print_formula(self)


@dataclass(frozen=True)
class And:
    parts: tuple

    def __str__(self):
        return print_formula(self)


@dataclass(frozen=True)
class Or:
    parts: tuple

    def __str__(self):
        return print_formula(self)


@dataclass(frozen=True)
class Quant:
    kind: QuantKind
    vars: tuple
    body: 'Formula'
    count: int = 0

    def __post_init__(self):
        if not self.vars:
            raise FormulaSyntaxError("quantifier binds no variable")
        if len(set(self.vars)) != len(self.vars):
            raise FormulaSyntaxError(f"duplicate bound variable in {' '.join(self.vars)}")
        if self.kind.is_counting:
            if len(self.vars) != 1:
                raise FormulaSyntaxError("a counting quantifier binds exactly one variable")
            if self.count < 0:
                raise FormulaSyntaxError("counting threshold must be non-negative")

    def __str__(self):
        return print_formula(self)


Formula = Union[Const, Atom, Eq, Not, And, Or, Quant]

TRUE: Final = Const(True)
FALSE: Final = Const(False)


def conj(parts):
    """Conjunction of parts; empty is true, singleton is the part"""
    parts = tuple(parts)
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return And(parts)


def disj(parts):
    """Disjunction of parts; empty is false, singleton is the part"""
    parts = tuple(parts)
    if not parts:
        return FALSE
    if len(parts) == 1:
        return parts[0]
    return Or(parts)


def implies(left, right):
    return Or((Not(left), right))


def iff(left, right):
    return And((implies(left, right), implies(right, left)))


def exists(variables, body):
    return Quant(QuantKind.EXISTS, tuple(variables), body)


def forall(variables, body):
    return Quant(QuantKind.FORALL, tuple(variables), body)


def counting(kind, variable, threshold, body):
    return Quant(kind, (variable,), body, threshold)


def children(phi):
    if isinstance(phi, Not):
        return (phi.body,)
    if isinstance(phi, (And, Or)):
        return phi.parts
    if isinstance(phi, Quant):
        return (phi.body,)
    return ()


def subformula_at(phi, path):
    """Follow child indices from the root"""
    node = phi
    for index in path:
        node = children(node)[index]
    return node


def walk(phi) -> Iterator:
    """Pre-order traversal of all nodes"""
    stack = [phi]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def atoms(phi):
    return [node for node in walk(phi) if isinstance(node, Atom)]


def free_variables(phi):
    """Free variables of phi"""
    if isinstance(phi, Atom):
        return frozenset(phi.args)
    if isinstance(phi, Eq):
        return frozenset((phi.left, phi.right))
    if isinstance(phi, Const):
        return frozenset()
    if isinstance(phi, Not):
        return free_variables(phi.body)
    if isinstance(phi, (And, Or)):
        return frozenset().union(*(free_variables(part) for part in phi.parts))
    return free_variables(phi.body) - frozenset(phi.vars)


def variables(phi):
    """Every variable name occurring in phi, bound or free"""
    names = set()
    for node in walk(phi):
        if isinstance(node, Atom):
            names.update(node.args)
        elif isinstance(node, Eq):
            names.update((node.left, node.right))
        elif isinstance(node, Quant):
            names.update(node.vars)
    return frozenset(names)


def variable_order(phi):
    """Variables in order of first occurrence"""
    seen = []
    for node in walk(phi):
        names = ()
        if isinstance(node, Atom):
            names = node.args
        elif isinstance(node, Eq):
            names = (node.left, node.right)
        elif isinstance(node, Quant):
            names = node.vars
        for name in names:
            if name not in seen:
                seen.append(name)
    return tuple(seen)


def formula_size(phi):
    """Symbol count of the printed formula"""
    if isinstance(phi, Const):
        return 1
    if isinstance(phi, Atom):
        return 1 + len(phi.args)
    if isinstance(phi, Eq):
        return 3
    if isinstance(phi, Not):
        return 1 + formula_size(phi.body)
    if isinstance(phi, (And, Or)):
        return sum(formula_size(part) for part in phi.parts) + max(len(phi.parts) - 1, 0)
    return 1 + len(phi.vars) + formula_size(phi.body)


def node_count(phi):
    return sum(1 for _ in walk(phi))


def has_counting(phi):
    return any(isinstance(node, Quant) and node.kind.is_counting for node in walk(phi))


def quantifier_rank(phi):
    if isinstance(phi, Quant):
        return len(phi.vars) + quantifier_rank(phi.body)
    return max((quantifier_rank(child) for child in children(phi)), default=0)


def max_threshold(phi):
    return max((node.count for node in walk(phi) if isinstance(node, Quant)), default=0)


def is_foc2(phi):
    """Two variable names at most; counting allowed"""
    return len(variables(phi)) <= 2


def infer_vocabulary(phi, base=None):
    """Vocabulary of the relation symbols in phi"""
    items = list(base.symbols) if base is not None else []
    items.extend((atom.rel, len(atom.args)) for atom in atoms(phi))
    return Vocabulary(tuple(items))


def check_vocabulary(phi, vocab):
    """Reject unknown symbols and arity mismatches"""
    for atom in atoms(phi):
        if atom.rel not in vocab:
            raise VocabularyError(f"unknown relation symbol {atom.rel}")
        if vocab.arity(atom.rel) != len(atom.args):
            raise VocabularyError(
                f"{atom.rel} has arity {vocab.arity(atom.rel)} but is applied to {len(atom.args)} variables")


# ============ RENAMING ============

def fresh_name(base, avoid):
    base = base.rstrip('0123456789') or 'v'
    for index in count(1):
        candidate = f"{base}{index}"
        if candidate not in avoid:
            return candidate


def substitute(phi, mapping):
    """Capture-avoiding simultaneous renaming of free variables"""
    mapping = {old: new for old, new in mapping.items() if old != new}
    if not mapping:
        return phi
    if isinstance(phi, Atom):
        return Atom(phi.rel, tuple(mapping.get(arg, arg) for arg in phi.args))
    if isinstance(phi, Eq):
        return Eq(mapping.get(phi.left, phi.left), mapping.get(phi.right, phi.right))
    if isinstance(phi, Const):
        return phi
    if isinstance(phi, Not):
        return Not(substitute(phi.body, mapping))
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(substitute(part, mapping) for part in phi.parts))
    inner = {old: new for old, new in mapping.items() if old not in phi.vars}
    if not inner:
        return phi
    body_free = free_variables(phi.body)
    captured = {new for old, new in inner.items() if old in body_free}
    avoid = set(variables(phi.body)) | set(inner) | set(inner.values())
    renamed = {}
    new_vars = []
    for var in phi.vars:
        if var in captured:
            replacement = fresh_name(var, avoid)
            avoid.add(replacement)
            renamed[var] = replacement
            new_vars.append(replacement)
        else:
            new_vars.append(var)
    return Quant(phi.kind, tuple(new_vars), substitute(phi.body, {**inner, **renamed}), phi.count)


def rename_all(phi, mapping):
    """Rename every occurrence, bound ones included; mapping must be injective"""
    if isinstance(phi, Atom):
        return Atom(phi.rel, tuple(mapping.get(arg, arg) for arg in phi.args))
    if isinstance(phi, Eq):
        return Eq(mapping.get(phi.left, phi.left), mapping.get(phi.right, phi.right))
    if isinstance(phi, Const):
        return phi
    if isinstance(phi, Not):
        return Not(rename_all(phi.body, mapping))
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(rename_all(part, mapping) for part in phi.parts))
    return Quant(phi.kind, tuple(mapping.get(var, var) for var in phi.vars),
                 rename_all(phi.body, mapping), phi.count)


def standardize_apart(phi, prefix='v'):
    """Give every quantifier its own fresh bound variables"""
    taken = set(variables(phi))
    counter = count()

    def fresh():
        while True:
            name = f"{prefix}{next(counter)}"
            if name not in taken:
                taken.add(name)
                return name

    def rebuild(node, env):
        if isinstance(node, Atom):
            return Atom(node.rel, tuple(env.get(arg, arg) for arg in node.args))
        if isinstance(node, Eq):
            return Eq(env.get(node.left, node.left), env.get(node.right, node.right))
        if isinstance(node, Const):
            return node
        if isinstance(node, Not):
            return Not(rebuild(node.body, env))
        if isinstance(node, (And, Or)):
            return type(node)(tuple(rebuild(part, env) for part in node.parts))
        new_vars = tuple(fresh() for _ in node.vars)
        return Quant(node.kind, new_vars, rebuild(node.body, {**env, **dict(zip(node.vars, new_vars))}),
                     node.count)

    return rebuild(phi, {})


def fold_constants(phi):
    """Propagate truth constants upwards"""
    if isinstance(phi, Not):
        body = fold_constants(phi.body)
        if isinstance(body, Const):
            return Const(not body.value)
        return Not(body)
    if isinstance(phi, (And, Or)):
        absorbing = isinstance(phi, Or)
        parts = []
        for part in phi.parts:
            part = fold_constants(part)
            if isinstance(part, Const):
                if part.value == absorbing:
                    return part
                continue
            parts.append(part)
        return conj(parts) if isinstance(phi, And) else disj(parts)
    if isinstance(phi, Quant):
        body = fold_constants(phi.body)
        if isinstance(body, Const) and not phi.kind.is_counting:
            return body
        return Quant(phi.kind, phi.vars, body, phi.count)
    return phi


# ============ PRINTER ============

def _quantifier_prefix(phi):
    if phi.kind is QuantKind.EXISTS:
        return 'E'
    if phi.kind is QuantKind.FORALL:
        return 'A'
    return f"E[{phi.kind.value}{phi.count}]"


def _operand(part):
    text = print_formula(part)
    if isinstance(part, (And, Or, Quant)):
        return f"({text})"
    return text


def print_formula(phi):
    """Render phi in the concrete syntax accepted by parse_formula"""
    if isinstance(phi, Const):
        return 'true' if phi.value else 'false'
    if isinstance(phi, Atom):
        return f"{phi.rel}({','.join(phi.args)})"
    if isinstance(phi, Eq):
        return f"{phi.left}={phi.right}"
    if isinstance(phi, Not):
        if isinstance(phi.body, (Const, Atom, Eq, Not)):
            return '~' + print_formula(phi.body)
        return f"~({print_formula(phi.body)})"
    if isinstance(phi, And):
        return ' & '.join(_operand(part) for part in phi.parts) if phi.parts else 'true'
    if isinstance(phi, Or):
        return ' | '.join(_operand(part) for part in phi.parts) if phi.parts else 'false'
    return f"{_quantifier_prefix(phi)} {' '.join(phi.vars)}. {print_formula(phi.body)}"


# ============ PARSER ============

_FORMULA_GRAMMAR = r"""
    ?start: formula

    ?formula: implication
            | implication "<->" formula -> iff
    ?implication: disjunction
                | disjunction "->" implication -> implication
    ?disjunction: conjunction
                | conjunction ("|" conjunction)+ -> disjunction
    ?conjunction: unary
                | unary ("&" unary)+ -> conjunction
    ?unary: "~" unary -> negation
          | quantifier IDENT+ "." formula -> quantified
          | "(" formula ")"
          | atomic
    quantifier: FORALL | EXISTS | COUNTING
    ?atomic: "true" -> true
           | "false" -> false
           | IDENT "(" IDENT ("," IDENT)* ")" -> atom
           | IDENT "=" IDENT -> equality
           | IDENT "!=" IDENT -> inequality

    FORALL.2: /A(?=\s)/
    EXISTS.2: /E(?=\s)/
    COUNTING.2: /E\[\s*(>=|<=|=)\s*\d+\s*\]/
    IDENT: /[A-Za-z_][A-Za-z0-9_]*/
    COMMENT: /#[^\n]*/

    %import common.WS
    %ignore WS
    %ignore COMMENT
"""

_FORMULA_PARSER: Final = Lark(_FORMULA_GRAMMAR, parser='lalr')

_COUNTING_KINDS: Final = {'>=': QuantKind.AT_LEAST, '<=': QuantKind.AT_MOST, '=': QuantKind.EXACTLY}


@v_args(inline=True)
class _FormulaBuilder(Transformer):
    """Turn the parse tree into desugared AST nodes"""

    def true(self):
        return TRUE

    def false(self):
        return FALSE

    def atom(self, rel, *args):
        return Atom(str(rel), tuple(str(arg) for arg in args))

    def equality(self, left, right):
        return Eq(str(left), str(right))

    def inequality(self, left, right):
        return Not(Eq(str(left), str(right)))

    def negation(self, body):
        return Not(body)

    def conjunction(self, *parts):
        return And(parts)

    def disjunction(self, *parts):
        return Or(parts)

    def implication(self, left, right):
        return implies(left, right)

    def iff(self, left, right):
        return iff(left, right)

    def quantifier(self, token):
        return token

    def quantified(self, token, *rest):
        names = tuple(str(name) for name in rest[:-1])
        body = rest[-1]
        text = str(token)
        try:
            if text == 'A':
                return Quant(QuantKind.FORALL, names, body)
            if text == 'E':
                return Quant(QuantKind.EXISTS, names, body)
            inner = text[2:-1].replace(' ', '')
            op = inner.rstrip('0123456789')
            return Quant(_COUNTING_KINDS[op], names, body, int(inner[len(op):]))
        except FormulaSyntaxError as err:
            raise FormulaSyntaxError(str(err), token.line, token.column) from None


def parse_formula(text, vocab=None):
    """Parse formula text into a desugared AST"""
    try:
        tree = _FORMULA_PARSER.parse(text)
    except exceptions.UnexpectedInput as err:
        found = getattr(err, 'token', None) or getattr(err, 'char', None) or 'end of input'
        line = err.line if getattr(err, 'line', -1) != -1 else None
        column = err.column if getattr(err, 'column', -1) != -1 else None
        raise FormulaSyntaxError(f"unexpected {found!s}", line, column) from None
    except exceptions.LarkError as err:
        raise FormulaSyntaxError(str(err)) from None
    try:
        phi = _FormulaBuilder().transform(tree)
    except exceptions.VisitError as err:
        if isinstance(err.orig_exc, Uf1Error):
            raise err.orig_exc from None
        raise
    if vocab is not None:
        check_vocabulary(phi, vocab)
    else:
        infer_vocabulary(phi)
    return phi


# ============ FRAGMENT VALIDATION ============

ONE_DIMENSIONALITY: Final = 'one-dimensionality'
UNIFORMITY: Final = 'uniformity'
OTHER: Final = 'other'

_RULE_SEVERITY: Final = {ONE_DIMENSIONALITY: 'HIGH', UNIFORMITY: 'HIGH', OTHER: 'MEDIUM'}
severity_order: Final = {'CRITICAL': 0, 'HIGH': 1, 'MEDIUM': 2, 'LOW': 3}


def path_text(path):
    return '/'.join(str(index) for index in path) or 'root'


@dataclass(frozen=True)
class Violation:
    path: tuple
    rule: str
    detail: str

    def as_record(self):
        return {
            'type': self.rule,
            'severity': _RULE_SEVERITY[self.rule],
            'location': path_text(self.path),
            'issue': self.detail,
        }


@dataclass(frozen=True)
class FragmentReport:
    member: bool
    fragment: str
    violations: tuple = ()
    live_sets: dict = field(default_factory=dict, compare=False)

    @property
    def verdict(self):
        return 'member' if self.member else 'non-member'

    def violations_frame(self):
        """Violations as a table, most severe first"""
        records = sorted((v.as_record() for v in self.violations),
                         key=lambda record: severity_order.get(record['severity'], 99))
        return pd.DataFrame(records, columns=['type', 'severity', 'location', 'issue'])


def block_chain(phi):
    """Variables and matrix of the maximal same-family chain starting at phi"""
    names = []
    node = phi
    depth = 0
    while isinstance(node, Quant) and node.kind.family == phi.kind.family:
        names.extend(node.vars)
        node = node.body
        depth += 1
    return tuple(names), node, depth


class _FragmentChecker:
    def __init__(self, allow_counting):
        self.allow_counting = allow_counting
        self.violations = []
        self.live = {}

    def visit(self, node, path):
        if isinstance(node, Quant):
            self.visit_block(node, path)
        elif isinstance(node, Atom):
            if len(set(node.args)) >= 2:
                self.violations.append(Violation(
                    path, OTHER, f"{print_formula(node)} has several free variables outside any quantifier block"))
        else:
            for index, child in enumerate(children(node)):
                self.visit(child, path + (index,))

    def visit_block(self, node, path):
        bound, matrix, depth = block_chain(node)
        link, link_path = node, path
        for _ in range(depth):
            if link.kind.is_counting and not self.allow_counting:
                self.violations.append(Violation(
                    link_path, OTHER, f"counting quantifier {_quantifier_prefix(link)} outside UFC1="))
            link, link_path = link.body, link_path + (0,)
        free = free_variables(node)
        groups = {}
        self.scan_matrix(matrix, link_path, groups)
        if len(free) > 1:
            self.violations.append(Violation(
                path, ONE_DIMENSIONALITY,
                f"block over {' '.join(bound)} leaves {len(free)} free variables: {', '.join(sorted(free))}"))
            return
        if len(groups) > 1:
            sets = list(groups)
            self.violations.append(Violation(
                groups[sets[1]], UNIFORMITY,
                f"atoms over {{{', '.join(sorted(sets[0]))}}} and {{{', '.join(sorted(sets[1]))}}} in one block"))
            return
        self.live[path] = next(iter(groups), frozenset())

    def scan_matrix(self, node, path, groups):
        if isinstance(node, Quant):
            self.visit_block(node, path)
        elif isinstance(node, Atom):
            names = frozenset(node.args)
            if len(names) >= 2:
                groups.setdefault(names, path)
        else:
            for index, child in enumerate(children(node)):
                self.scan_matrix(child, path + (index,), groups)


def validate_fragment(phi, allow_counting=False):
    """Decide membership of phi in UF1= (or UFC1= when counting is allowed)"""
    checker = _FragmentChecker(allow_counting)
    checker.visit(phi, ())
    fragment = 'UFC1=' if allow_counting else 'UF1='
    violations = tuple(checker.violations)
    if violations:
        LOGGER.debug("%s rejected with %d violation(s)", fragment, len(violations))
    return FragmentReport(not violations, fragment, violations, dict(checker.live))


def require_member(phi, allow_counting=False):
    """Raise FragmentError unless phi is a member"""
    report = validate_fragment(phi, allow_counting)
    if not report.member:
        first = report.violations[0]
        raise FragmentError(f"{first.rule} violation at {path_text(first.path)}: {first.detail}")
    return report


def _live_groups(node, groups):
    """Collect atoms with two or more variables outside nested blocks, keyed by variable set"""
    if isinstance(node, Atom):
        names = frozenset(node.args)
        if len(names) >= 2:
            groups.setdefault(names, node)
    elif not isinstance(node, Quant):
        for child in children(node):
            _live_groups(child, groups)


def live_variables(matrix, block_vars=()):
    """Shared variable set of the non-equality atoms with two or more variables"""
    groups = {}
    _live_groups(matrix, groups)
    if len(groups) > 1:
        first, second = list(groups.values())[:2]
        raise FragmentError(
            f"uniformity violation: {print_formula(first)} and {print_formula(second)} use different variable sets")
    if block_vars:
        outside = free_variables(matrix) - set(block_vars)
        if len(outside) > 1:
            raise FragmentError(f"variables {', '.join(sorted(outside))} are out of scope of the block")
    return next(iter(groups), frozenset())


def eliminate(parts: Iterable, value: bool) -> Optional[list]:
    """Drop constants equal to value from parts; None when the other constant occurs"""
    kept = []
    for part in parts:
        if isinstance(part, Const):
            if part.value != value:
                return None
            continue
        kept.append(part)
    return kept
