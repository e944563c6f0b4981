import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Final, Optional

import pandas as pd

from .errors import EvaluationError, InternalInvariantError
from .normal_form import NormalForm, to_normal_form
from .structures import Structure, compile_formula, evaluate, evaluate3
from .syntax import (FALSE, Atom, Eq, atoms, fold_constants, free_variables, infer_vocabulary,
                     max_threshold, quantifier_rank, walk)

LOGGER: Final = logging.getLogger(__name__)

DEFAULT_CAP: Final = 6
SATURATION_SIZE: Final = 60


class Verdict(str, Enum):
    SAT = 'sat'
    UNSAT = 'unsat'
    UNKNOWN = 'unknown'


EXIT_CODES: Final = {Verdict.SAT: 0, Verdict.UNSAT: 1, Verdict.UNKNOWN: 2}


@dataclass(frozen=True)
class SatResult:
    verdict: Verdict
    witness: Optional[Structure]
    explored_bound: int
    stats: tuple = field(default=(), compare=False)

    @property
    def exit_code(self):
        return EXIT_CODES[self.verdict]

    def summary_frame(self):
        """Per-size search statistics"""
        return pd.DataFrame(list(self.stats), columns=['size', 'facts', 'nodes', 'backtracks', 'outcome'])


def bound_for_size(s):
    """8 s^3 2^s, saturating once s exceeds the sentinel size"""
    s = min(s, SATURATION_SIZE + 1)
    return 8 * s ** 3 * 2 ** s


def small_model_bound(nf):
    """Universe-size bound of the small-model construction for nf"""
    return bound_for_size(nf.size)


# ============ FACT BOOKKEEPING ============

def _atom_patterns(phi):
    """rel -> index patterns (first-occurrence positions) of its atoms in phi"""
    patterns = {}
    for atom in atoms(phi):
        first = {}
        patterns.setdefault(atom.rel, set()).add(
            tuple(first.setdefault(arg, i) for i, arg in enumerate(atom.args)))
    return patterns


def relevant_facts(phi, vocab, size):
    """Facts some atom of phi can read, diagonal facts first (element-major), then by largest element"""
    patterns = _atom_patterns(phi)
    diagonal, other = [], []
    for name, arity in vocab.symbols:
        for tup in product(range(size), repeat=arity):
            if not any(all(tup[i] == tup[p] for i, p in enumerate(pattern))
                       for pattern in patterns.get(name, ())):
                continue
            (diagonal if len(set(tup)) == 1 else other).append((name, tup))
    diagonal.sort(key=lambda fact: (fact[1][0], fact[0]))
    other.sort(key=lambda fact: (max(fact[1]), tuple(sorted(set(fact[1]))), fact[0], fact[1]))
    return diagonal + other


def _diagonal_by_element(facts, size):
    """Indices of the diagonal facts of each element"""
    by_element = {a: [] for a in range(size)}
    for i, (name, tup) in enumerate(facts):
        if len(set(tup)) == 1:
            by_element[tup[0]].append(i)
    return by_element


# ============ NORMAL-FORM SEARCH ============

class _NormalFormSearch:
    """Backtracking over relevant facts with universal checks and witness demands at their trigger"""

    def __init__(self, nf, size, with_demands=True):
        self.nf = nf
        self.size = size
        self.facts = relevant_facts(nf.to_formula(), nf.vocab, size)
        self.index = {fact: i for i, fact in enumerate(self.facts)}
        self.checks_at = [[] for _ in range(len(self.facts) + 1)]
        self.nodes = 0
        self.backtracks = 0
        self.true = set()

        for conjunct in nf.univ_conjuncts:
            run = compile_formula(conjunct.matrix)
            read = atoms(conjunct.matrix)
            for elements in product(range(size), repeat=conjunct.width):
                env = dict(zip(conjunct.variables, elements))
                self.checks_at[self._trigger(read, env)].append(('forall', run, env))
        if with_demands:
            for conjunct in nf.exist_conjuncts:
                run = compile_formula(conjunct.matrix)
                read = atoms(conjunct.matrix)
                for a in range(size):
                    candidates = []
                    trigger = 0
                    for witnesses in product(range(size), repeat=conjunct.width):
                        env = dict(zip(conjunct.variables, (a,) + witnesses))
                        trigger = max(trigger, self._trigger(read, env))
                        candidates.append(env)
                    self.checks_at[trigger].append(('exists', run, candidates))
        diagonal = _diagonal_by_element(self.facts, size)
        for a in range(1, size):
            if diagonal[a]:
                self.checks_at[diagonal[a][-1] + 1].append(('order', diagonal[a - 1], diagonal[a]))

    def _trigger(self, read, env):
        """Position after the last fact the check reads"""
        positions = [self.index[(atom.rel, tuple(env[arg] for arg in atom.args))] for atom in read]
        return max(positions) + 1 if positions else 0

    def _type_bits(self, indices):
        return tuple(self.facts[i] in self.true for i in indices)

    def _passes(self, trigger):
        """Run every check that became decidable at trigger"""
        for check in self.checks_at[trigger]:
            kind = check[0]
            if kind == 'forall':
                if not check[1](self.true, self.size, check[2]):
                    return False
            elif kind == 'exists':
                run = check[1]
                if not any(run(self.true, self.size, env) for env in check[2]):
                    return False
            elif self._type_bits(check[1]) > self._type_bits(check[2]):
                return False
        return True

    def _extend(self, i, prefix):
        """Decide fact i, then recurse; facts of a model or None"""
        if i == len(self.facts):
            return frozenset(self.true)
        choices = (prefix[i],) if i < len(prefix) else (False, True)
        fact = self.facts[i]
        for value in choices:
            self.nodes += 1
            if value:
                self.true.add(fact)
            if self._passes(i + 1):
                found = self._extend(i + 1, prefix)
                if found is not None:
                    return found
            if value:
                self.true.discard(fact)
            self.backtracks += 1
        return None

    def run(self, prefix=()):
        """True facts of a model extending prefix, or None"""
        self.true = set()
        if not self._passes(0):
            return None
        return self._extend(0, tuple(prefix))

    def branch_prefixes(self, limit=6):
        """Assignments to the leading diagonal facts of element 0"""
        width = min(len(_diagonal_by_element(self.facts, self.size)[0]), limit)
        return list(product((False, True), repeat=width))


def _run_branch(task):
    """Worker entry point: one prefix branch in its own process"""
    nf, size, prefix = task
    search = _NormalFormSearch(nf, size)
    found = search.run(prefix)
    return found, search.nodes, search.backtracks


def _search_size(nf, size, jobs):
    """Model at one size plus fact, node and backtrack counts"""
    search = _NormalFormSearch(nf, size)
    if jobs <= 1:
        found = search.run()
        return found, len(search.facts), search.nodes, search.backtracks
    tasks = [(nf, size, prefix) for prefix in search.branch_prefixes()]
    nodes = backtracks = 0
    found = None
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        for result, branch_nodes, branch_backtracks in executor.map(_run_branch, tasks):
            nodes += branch_nodes
            backtracks += branch_backtracks
            if result is not None:
                found = result
                break
        executor.shutdown(wait=True, cancel_futures=True)
    return found, len(search.facts), nodes, backtracks


def admits_no_type(nf):
    """True when no single element can satisfy the universal conjuncts on its own"""
    return _NormalFormSearch(nf, 1, with_demands=False).run() is None


def decide_sat(nf, cap=None, jobs=1):
    """Bounded model search for a normal form up to min(cap, small-model bound)"""
    if not isinstance(nf, NormalForm):
        nf = to_normal_form(nf)
    cap = DEFAULT_CAP if cap is None else cap
    bound = small_model_bound(nf)
    if admits_no_type(nf):
        LOGGER.info("no 1-type satisfies the universal conjuncts: unsat")
        return SatResult(Verdict.UNSAT, None, bound)
    limit = min(cap, bound)
    stats = []
    for size in range(1, limit + 1):
        found, fact_count, nodes, backtracks = _search_size(nf, size, jobs)
        LOGGER.debug("size %d: %d facts, %d nodes, %d backtracks", size, fact_count, nodes, backtracks)
        stats.append({'size': size, 'facts': fact_count, 'nodes': nodes, 'backtracks': backtracks,
                      'outcome': 'sat' if found is not None else 'exhausted'})
        if found is not None:
            witness = Structure.from_facts(nf.vocab, size, found)
            if not evaluate(witness, nf.to_formula()):
                raise InternalInvariantError(f"search produced a non-model of size {size}")
            LOGGER.info("sat at size %d", size)
            return SatResult(Verdict.SAT, witness, size - 1, tuple(stats))
    if limit >= bound:
        LOGGER.info("exhausted every size up to the bound %d: unsat", bound)
        return SatResult(Verdict.UNSAT, None, limit, tuple(stats))
    LOGGER.warning("no model up to size %d; the bound %d is out of reach", limit, bound)
    return SatResult(Verdict.UNKNOWN, None, limit, tuple(stats))


# ============ BRUTE-FORCE ORACLE ============

class _FactSearch:
    """Three-valued pruning search for a model of any sentence at one size"""

    def __init__(self, phi, vocab, size):
        self.phi = phi
        self.vocab = vocab
        self.size = size
        self.facts = relevant_facts(phi, vocab, size)
        self.order_checks = {}
        diagonal = _diagonal_by_element(self.facts, size)
        for a in range(1, size):
            if diagonal[a]:
                self.order_checks[diagonal[a][-1] + 1] = (diagonal[a - 1], diagonal[a])
        self.values = {}
        self.nodes = 0

    def _ordered(self, i):
        """Diagonal facts of consecutive elements stay in order"""
        check = self.order_checks.get(i)
        if check is None:
            return True
        before = tuple(self.values[self.facts[j]] for j in check[0])
        after = tuple(self.values[self.facts[j]] for j in check[1])
        return before <= after

    def _extend(self, i):
        verdict = evaluate3(self.values, self.size, self.phi)
        if verdict is False:
            return None
        if verdict is True:
            return {fact for fact, value in self.values.items() if value}
        if i == len(self.facts):
            raise InternalInvariantError("complete assignment evaluated to unknown")
        fact = self.facts[i]
        for value in (False, True):
            self.nodes += 1
            self.values[fact] = value
            if self._ordered(i + 1):
                found = self._extend(i + 1)
                if found is not None:
                    return found
        del self.values[fact]
        return None

    def run(self):
        self.values = {}
        found = self._extend(0)
        if found is None:
            return None
        witness = Structure.from_facts(self.vocab, self.size, found)
        if not evaluate(witness, self.phi):
            raise InternalInvariantError("three-valued search accepted a non-model")
        return witness


def satisfiable_at_size(phi, size, vocab=None):
    """A model of the sentence phi with exactly size elements, or None"""
    if free_variables(phi):
        raise EvaluationError(f"sentence expected, free variables: {', '.join(sorted(free_variables(phi)))}")
    return _FactSearch(phi, infer_vocabulary(phi, vocab), size).run()


def completeness_size(phi):
    """Size beyond which a monadic sentence gains no new models, else None"""
    if any(isinstance(atom, Atom) and len(set(atom.args)) > 1 for atom in atoms(phi)):
        return None
    predicates = {atom.rel for atom in atoms(phi)}
    has_equality = any(isinstance(node, Eq) for node in walk(phi))
    threshold = max_threshold(phi)
    rank = max(quantifier_rank(phi), 1)
    if threshold:
        per_type = rank * (threshold + 1)
    elif has_equality:
        per_type = rank
    else:
        per_type = 1
    return 2 ** len(predicates) * per_type


def brute_force_sat(phi, max_size, vocab=None):
    """Exhaustive model search up to max_size; the trusted oracle"""
    if free_variables(phi):
        raise EvaluationError(f"sentence expected, free variables: {', '.join(sorted(free_variables(phi)))}")
    vocab = infer_vocabulary(phi, vocab)
    stats = []
    for size in range(1, max_size + 1):
        search = _FactSearch(phi, vocab, size)
        witness = search.run()
        stats.append({'size': size, 'facts': len(search.facts), 'nodes': search.nodes, 'backtracks': 0,
                      'outcome': 'sat' if witness is not None else 'exhausted'})
        LOGGER.debug("brute force size %d: %d nodes", size, search.nodes)
        if witness is not None:
            return SatResult(Verdict.SAT, witness, size - 1, tuple(stats))
    if fold_constants(phi) == FALSE:
        return SatResult(Verdict.UNSAT, None, max_size, tuple(stats))
    complete = completeness_size(phi)
    if complete is not None and max_size >= complete:
        return SatResult(Verdict.UNSAT, None, max_size, tuple(stats))
    return SatResult(Verdict.UNKNOWN, None, max_size, tuple(stats))
