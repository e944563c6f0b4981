import logging
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Final

import pandas as pd

from .errors import InternalInvariantError, PreconditionError
from .normal_form import NormalForm
from .solver import bound_for_size, small_model_bound
from .structures import (Structure, compile_formula, evaluate, one_type, realized_types,
                         substructure, table_shapes)

LOGGER: Final = logging.getLogger(__name__)

SETS: Final = ('E', 'F', 'G')
NEXT_SET: Final = {'E': 'F', 'F': 'G', 'G': 'E', 'court': 'E'}


def court_bound(nf):
    """2 s^3 2^s for the printed size s of nf"""
    return bound_for_size(nf.size) // 4


@dataclass(frozen=True)
class WitnessStructure:
    center: int
    conjunct: int
    tuple: tuple
    live_part: frozenset
    free: bool

    @property
    def universe(self):
        """Centre plus the witness tuple"""
        return frozenset((self.center,) + self.tuple)


@dataclass(frozen=True)
class Court:
    kings: frozenset
    donors: frozenset
    court: tuple
    royal_types: frozenset
    witnesses: dict = field(default_factory=dict, compare=False)
    selections: dict = field(default_factory=dict, compare=False)

    def members_frame(self):
        """One row per court element with its king and donor flags"""
        rows = [{'element': a, 'king': a in self.kings, 'donor': a in self.donors} for a in self.court]
        return pd.DataFrame(rows, columns=['element', 'king', 'donor'])


# ============ PRECONDITION ============

def find_witness(A, nf, conjunct_index, a, want_free=False):
    """First witness tuple in lexicographic order for a and one existential conjunct"""
    conjunct = nf.exist_conjuncts[conjunct_index]
    run = compile_formula(conjunct.matrix)
    live_positions = [i for i, var in enumerate(conjunct.variables) if var in conjunct.live]
    for witnesses in product(range(A.size), repeat=conjunct.width):
        env = dict(zip(conjunct.variables, (a,) + witnesses))
        if not run(A.facts, A.size, env):
            continue
        values = (a,) + witnesses
        live = frozenset(values[i] for i in live_positions)
        if want_free and a in live:
            continue
        return WitnessStructure(a, conjunct_index, witnesses, live, a not in live)
    return None


def check_model(A, nf):
    """Raise PreconditionError naming the first conjunct and element that fail"""
    for index, conjunct in enumerate(nf.univ_conjuncts):
        run = compile_formula(conjunct.matrix)
        for elements in product(range(A.size), repeat=conjunct.width):
            if not run(A.facts, A.size, dict(zip(conjunct.variables, elements))):
                raise PreconditionError(
                    f"universal conjunct {index + 1} fails on elements {elements}")
    for index in range(nf.m_exists):
        for a in A.domain:
            if find_witness(A, nf, index, a) is None:
                raise PreconditionError(f"existential conjunct {index + 1} has no witness for element {a}")


# ============ COURT ============

def find_kings(A, n):
    """Elements whose 1-type is realized at most n-1 times"""
    royal = {t for t, elements in realized_types(A).items() if len(elements) <= n - 1}
    kings = frozenset(a for a in A.domain if one_type(A, a) in royal)
    return kings, frozenset(royal)


def build_court(A, nf):
    """Kings, free-live-part donors and their witness structures"""
    check_model(A, nf)
    n = nf.width
    realized = realized_types(A)
    kings, royal = find_kings(A, n)

    selections = {}
    donors = set()
    for alpha, elements in realized.items():
        for index in range(nf.m_exists):
            for a in elements:
                witness = find_witness(A, nf, index, a, want_free=True)
                if witness is not None:
                    selections[(alpha, index)] = witness
                    donors.update(witness.live_part)
                    break

    witnesses = {}
    court = set(kings) | donors
    for a in sorted(kings | donors):
        for index in range(nf.m_exists):
            witness = find_witness(A, nf, index, a)
            witnesses[(a, index)] = witness
            court.update(witness.universe)

    types = len(realized)
    seeds = len(kings | donors)
    if len(kings) > (n - 1) * types:
        raise InternalInvariantError(f"{len(kings)} kings exceed (n-1)|types| = {(n - 1) * types}")
    if len(donors) > (n - 1) * nf.m_exists * types:
        raise InternalInvariantError(f"{len(donors)} donors exceed the selection bound")
    if len(court) > seeds * (1 + nf.m_exists * (n - 1)):
        raise InternalInvariantError(f"court of size {len(court)} exceeds its witness bound")
    if len(court) > court_bound(nf):
        raise InternalInvariantError(f"court of size {len(court)} exceeds {court_bound(nf)}")
    LOGGER.info("court: %d kings, %d donors, %d members", len(kings), len(donors), len(court))
    return Court(frozenset(kings), frozenset(donors), tuple(sorted(court)), royal, witnesses, selections)


# ============ COMPRESSION ============

@dataclass
class CompressionResult:
    structure: Structure
    court: Court
    labels: tuple
    cases: dict
    completions: int
    conflicts: list
    events: list

    def trace_frame(self):
        """Court membership, witness cases and completion copies"""
        return pd.DataFrame(self.events, columns=['step', 'element', 'detail'])

    def provenance_frame(self):
        """Set, source element or type and slot behind every new element"""
        rows = [{'element': i, 'set': label[0], 'source': label[1], 'slot': label[2]}
                for i, label in enumerate(self.labels)]
        return pd.DataFrame(rows, columns=['element', 'set', 'source', 'slot'])

    def conflicts_frame(self):
        """Write-once clashes between tables, normally empty"""
        return pd.DataFrame(self.conflicts, columns=['type', 'severity', 'issue'])


class _Compressor:
    """Lays out the court and the E, F, G copies, then writes their tables"""

    def __init__(self, A, nf, court):
        self.A = A
        self.nf = nf
        self.court = court
        self.n = nf.width
        self.realized = realized_types(A)
        self.non_royal = [t for t in self.realized if t not in court.royal_types]
        self.slots = nf.m_exists + self.n
        self.labels = []
        self.types = []
        self.index = {}
        self.tables = {}
        self.conflicts = []
        self.events = []
        self.cases = {'free': 0, 'case 1': 0, 'case 2': 0, 'case 3': 0, 'case 4': 0}
        self.witness_cache = {}

    # universe
    def lay_out(self):
        """Number the court first, then every (set, non-royal type, slot) copy"""
        for a in self.court.court:
            self.index[('court', a)] = len(self.labels)
            self.labels.append(('court', a, None))
            self.types.append(one_type(self.A, a))
            self.events.append({'step': 'court', 'element': len(self.labels) - 1,
                                'detail': 'king' if a in self.court.kings else
                                ('donor' if a in self.court.donors else 'witness')})
        for name in SETS:
            for t_index, alpha in enumerate(self.non_royal):
                for slot in range(self.slots):
                    self.index[(name, t_index, slot)] = len(self.labels)
                    self.labels.append((name, t_index, slot))
                    self.types.append(alpha)

    def set_of(self, element):
        """court, E, F or G"""
        return self.labels[element][0]

    def pattern(self, element):
        """Element of A whose witnesses this element copies"""
        label = self.labels[element]
        if label[0] == 'court':
            return label[1]
        return self.realized[self.non_royal[label[1]]][0]

    def witness(self, a, index):
        """Cached witness structure of a for one existential conjunct"""
        key = (a, index)
        if key not in self.witness_cache:
            self.witness_cache[key] = find_witness(self.A, self.nf, index, a)
        return self.witness_cache[key]

    # tables
    def write(self, target, source, origin):
        """Copy the table of source onto target, recording a conflict on rewrite"""
        shapes = table_shapes(self.A.vocab, len(target))
        facts = frozenset((name, tuple(target[i] for i in combo)) for name, combo in shapes
                          if self.A.holds(name, tuple(source[i] for i in combo)))
        key = frozenset(target)
        previous = self.tables.get(key)
        if previous is None:
            self.tables[key] = facts
        elif previous != facts:
            self.conflicts.append({'type': 'table conflict', 'severity': 'CRITICAL',
                                   'issue': f"{origin} rewrites the table of {sorted(key)}"})

    def provide_witnesses(self):
        """Witness every existential conjunct for every element outside the seeds"""
        seeds = self.court.kings | self.court.donors
        court_members = set(self.court.court)
        for element in range(len(self.labels)):
            label = self.labels[element]
            if label[0] == 'court' and label[1] in seeds:
                continue
            a = self.pattern(element)
            for j in range(self.nf.m_exists):
                structure = self.witness(a, j)
                if structure.free:
                    self.cases['free'] += 1
                    continue
                live = sorted(structure.live_part - {a})
                royals = [r for r in live if r in self.court.kings]
                others = [b for b in live if b not in self.court.kings]
                in_court = label[0] == 'court' and a in court_members
                if not others:
                    if in_court:
                        self.cases['case 1'] += 1
                        continue
                    self.cases['case 2'] += 1
                    if royals:
                        target = (element,) + tuple(self.index[('court', r)] for r in royals)
                        self.write(target, (a,) + tuple(royals), f"case 2 for element {element}")
                    continue
                source_set = NEXT_SET[self.set_of(element)]
                self.cases['case 3' if self.set_of(element) == 'E' else 'case 4'] += 1
                chosen = self.choose(source_set, j, others)
                target = (element,) + tuple(self.index[('court', r)] for r in royals) + tuple(chosen)
                self.write(target, (a,) + tuple(royals) + tuple(others),
                           f"case {3 if self.set_of(element) == 'E' else 4} for element {element}")
                self.events.append({'step': 'witness', 'element': element,
                                    'detail': f"conjunct {j + 1} from {source_set}: {chosen}"})

    def choose(self, source_set, j, others):
        """First live non-royal from slot j, the rest from distinct reserve slots"""
        chosen = []
        used = set()
        for position, b in enumerate(others):
            t_index = self.non_royal.index(one_type(self.A, b))
            if position == 0:
                slot = j
            else:
                slot = next(s for s in range(self.nf.m_exists, self.slots) if (t_index, s) not in used)
            used.add((t_index, slot))
            chosen.append(self.index[(source_set, t_index, slot)])
        return chosen

    def complete(self):
        """Copy tables of type-matched distinct elements of A onto every undefined small subset"""
        limit = min(self.n, self.A.vocab.max_arity)
        court_members = set(range(len(self.court.court)))
        copies = 0
        sources = {}
        for k in range(2, limit + 1):
            if not table_shapes(self.A.vocab, k):
                continue
            for subset in combinations(range(len(self.labels)), k):
                if set(subset) <= court_members or frozenset(subset) in self.tables:
                    continue
                wanted = tuple(self.types[e] for e in subset)
                if wanted not in sources:
                    sources[wanted] = self.source_tuple(wanted)
                self.write(subset, sources[wanted], 'completion')
                copies += 1
        return copies

    def source_tuple(self, wanted):
        """Distinct elements of A realizing the wanted 1-types in order"""
        used = set()
        chosen = []
        for alpha in wanted:
            candidates = [a for a in self.realized.get(alpha, []) if a not in used]
            if not candidates:
                raise InternalInvariantError(f"no distinct source element of type {alpha.describe()}")
            used.add(candidates[0])
            chosen.append(candidates[0])
        return tuple(chosen)

    def assemble(self):
        """Court facts, diagonal facts of the copies and every written table"""
        facts = set(substructure(self.A, self.court.court).facts) if self.court.court else set()
        for element in range(len(self.court.court), len(self.labels)):
            alpha = self.types[element]
            for (name, combo), bit in zip(alpha.shapes, alpha.bits):
                if bit:
                    facts.add((name, (element,) * len(combo)))
        for table in self.tables.values():
            facts.update(table)
        return Structure.from_facts(self.A.vocab, len(self.labels), facts)


def compress_with_report(A, nf: NormalForm):
    """Small model of nf built from the model A, with the construction trace"""
    court = build_court(A, nf)
    compressor = _Compressor(A, nf, court)
    compressor.lay_out()
    compressor.provide_witnesses()
    completions = compressor.complete()
    result = compressor.assemble()
    LOGGER.info("compressed %d elements to %d (%d completion copies)", A.size, result.size, completions)

    if compressor.conflicts:
        raise InternalInvariantError(compressor.conflicts[0]['issue'])
    if result.size > small_model_bound(nf):
        raise InternalInvariantError(f"model of size {result.size} exceeds the bound {small_model_bound(nf)}")
    if not evaluate(result, nf.to_formula()):
        raise InternalInvariantError("compressed structure is not a model")
    original_types = realized_types(A)
    new_types = realized_types(result)
    if not set(new_types) <= set(original_types):
        raise InternalInvariantError("compression realized a new 1-type")
    _, new_royal = find_kings(result, nf.width)
    if not new_royal <= court.royal_types:
        raise InternalInvariantError("compression introduced a new royal type")
    return CompressionResult(result, court, tuple(compressor.labels), dict(compressor.cases), completions,
                             compressor.conflicts, compressor.events)


def compress_model(A, nf):
    """Compressed model of nf built from A"""
    return compress_with_report(A, nf).structure
