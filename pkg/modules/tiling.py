import logging
from dataclasses import dataclass
from math import lcm
from typing import Final, Optional

from lark import Lark, Transformer, exceptions, v_args

from .errors import InternalInvariantError, PreconditionError, StructureError, TileSetError, Uf1Error
from .structures import Structure, evaluate, expand
from .syntax import And, Atom, Not, Quant, QuantKind, Vocabulary, conj, disj, iff, parse_formula

LOGGER: Final = logging.getLogger(__name__)

GRID_VOCAB: Final = Vocabulary.of(R=3, E=1)
TORUS_VOCAB: Final = Vocabulary.of(H=2, V=2)
SIDES: Final = ('R', 'L', 'T', 'B')

_ETA_CONJUNCTS: Final = (
    "E x. E(x)",
    "A x. E[=1] y. E z. (R(x,y,z) & (E(x) <-> E(y)))",
    "A x. E[=1] y. E z. (R(x,y,z) & (E(x) <-> ~E(y)))",
    "A x. E[=1] z. E y. R(x,y,z)",
    "A x y z. (R(x,y,z) -> (E(x) <-> ~E(z)))",
    "A x. E[=1] y. E z. ((E(x) <-> E(y)) & (R(z,x,y) | R(x,y,z)))",
    "A x. E[=1] y. E z. ((E(x) <-> ~E(y)) & (R(z,x,y) | R(x,y,z)))",
)


# ============ TILES ============

@dataclass(frozen=True)
class Tile:
    name: str
    right: str
    left: str
    top: str
    bottom: str

    @property
    def predicate(self):
        return f"P_{self.name}"


@dataclass(frozen=True)
class TileSet:
    tiles: tuple

    def __post_init__(self):
        if not self.tiles:
            raise TileSetError("a tile set needs at least one tile")
        names = [tile.name for tile in self.tiles]
        if len(set(names)) != len(names):
            raise TileSetError(f"duplicate tile names in {', '.join(names)}")

    def __iter__(self):
        return iter(self.tiles)

    def __len__(self):
        return len(self.tiles)

    @property
    def colors(self):
        return sorted({c for tile in self.tiles for c in (tile.right, tile.left, tile.top, tile.bottom)})

    @property
    def vocab(self):
        return Vocabulary(tuple((tile.predicate, 1) for tile in self.tiles))


_TILE_GRAMMAR = r"""
    start: tile*
    tile: "tile" WORD side+
    side: SIDE "=" WORD

    SIDE: "R" | "L" | "T" | "B"
    WORD: /[A-Za-z0-9_]+/
    COMMENT: /#[^\n]*/

    %import common.WS
    %ignore WS
    %ignore COMMENT
"""

_TILE_PARSER: Final = Lark(_TILE_GRAMMAR, parser='lalr')


@v_args(inline=True)
class _TileBuilder(Transformer):
    def start(self, *tiles):
        return TileSet(tuple(tiles))

    def side(self, side, color):
        return str(side), str(color)

    def tile(self, name, *sides):
        colors = {}
        for side, color in sides:
            if side in colors:
                raise TileSetError(f"tile {name} sets side {side} twice (line {name.line})")
            colors[side] = color
        missing = [side for side in SIDES if side not in colors]
        if missing:
            raise TileSetError(f"tile {name} has no colour for {', '.join(missing)} (line {name.line})")
        return Tile(str(name), colors['R'], colors['L'], colors['T'], colors['B'])


def parse_tiles(text):
    """Read 'tile NAME R=c L=c T=c B=c' lines"""
    try:
        tree = _TILE_PARSER.parse(text)
    except exceptions.UnexpectedInput as err:
        found = getattr(err, 'token', None) or getattr(err, 'char', None) or 'end of input'
        raise TileSetError(f"unexpected {found!s} at line {err.line}, column {err.column}") from None
    except exceptions.LarkError as err:
        raise TileSetError(str(err)) from None
    try:
        return _TileBuilder().transform(tree)
    except exceptions.VisitError as err:
        if isinstance(err.orig_exc, Uf1Error):
            raise err.orig_exc from None
        raise


def print_tiles(ts):
    return ''.join(f"tile {t.name} R={t.right} L={t.left} T={t.top} B={t.bottom}\n" for t in ts)


# ============ FORMULAS ============

def gen_eta():
    """The seven grid axioms over {R/3, E/1}"""
    return And(tuple(parse_formula(text, GRID_VOCAB) for text in _ETA_CONJUNCTS))


def _adjacency(vertical):
    """R-link between x and y with E agreeing (horizontal) or alternating (vertical)"""
    link = disj([Atom('R', ('x', 'y', 'z')), Atom('R', ('z', 'x', 'y'))])
    target = Not(Atom('E', ('y',))) if vertical else Atom('E', ('y',))
    return conj([link, iff(Atom('E', ('x',)), target)])


def _mismatches(ts, vertical):
    """One forall conjunct per ordered tile pair whose shared edge colours clash"""
    parts = []
    for t in ts:
        for u in ts:
            clash = t.top != u.bottom if vertical else t.right != u.left
            if clash:
                body = conj([_adjacency(vertical), Atom(t.predicate, ('x',)), Atom(u.predicate, ('y',))])
                parts.append(Quant(QuantKind.FORALL, ('x', 'y', 'z'), Not(body)))
    return parts


def gen_tiling_formula(ts):
    """eta plus exactly-one-tile and the horizontal and vertical matching constraints"""
    exactly_one = [disj([Atom(t.predicate, ('x',)) for t in ts])]
    for i, t in enumerate(ts.tiles):
        for u in ts.tiles[i + 1:]:
            exactly_one.append(Not(conj([Atom(t.predicate, ('x',)), Atom(u.predicate, ('x',))])))
    psi_0 = Quant(QuantKind.FORALL, ('x',), conj(exactly_one))
    horizontal = _mismatches(ts, vertical=False)
    vertical = _mismatches(ts, vertical=True)
    LOGGER.debug("tiling formula: %d tiles, %d horizontal and %d vertical mismatches",
                 len(ts), len(horizontal), len(vertical))
    return And(gen_eta().parts + (psi_0,) + tuple(horizontal) + tuple(vertical))


# ============ GRIDS AND TORI ============

def build_torus(p, q=None):
    """(p x q)-torus over {H, V}; element y*p + x is the cell in column x, row y"""
    q = p if q is None else q
    if p < 1 or q < 1:
        raise StructureError(f"torus dimensions must be positive, got {p}x{q}")
    H = {(y * p + x, y * p + (x + 1) % p) for y in range(q) for x in range(p)}
    V = {(y * p + x, ((y + 1) % q) * p + x) for y in range(q) for x in range(p)}
    return Structure.build(TORUS_VOCAB, p * q, {'H': H, 'V': V})


def encode_torus(p, q):
    """{R, E} encoding whose projection is the (p x q)-torus; element row*p + col"""
    if p < 1 or q < 2 or q % 2:
        raise StructureError(f"encodings need p >= 1 columns and an even number of rows, got {p}x{q}")

    def cell(row, col):
        return (row % q) * p + col % p

    E = {(cell(row, col),) for row in range(0, q, 2) for col in range(p)}
    R = set()
    for row in range(q):
        for col in range(p):
            a = cell(row, col)
            corner = cell(row + 1, col + 1)
            R.add((a, cell(row, col + 1), corner))
            R.add((a, cell(row + 1, col), corner))
    return Structure.build(GRID_VOCAB, p * q, {'R': R, 'E': E})


def build_grid_encoding(n):
    """The encoding whose projection is the (2n x 2n)-torus"""
    if n < 1:
        raise StructureError(f"grid size must be positive, got {n}")
    return encode_torus(2 * n, 2 * n)


def star_projection(A):
    """{H, V} structure of the pairs linked by R with agreeing or alternating E"""
    if A.vocab != GRID_VOCAB:
        raise StructureError(f"projection needs the vocabulary {GRID_VOCAB}, got {A.vocab}")
    even = {a for (a,) in A.relation('E')}
    H, V = set(), set()
    for a, b, c in A.relation('R'):
        for x, y in ((a, b), (b, c)):
            (H if (x in even) == (y in even) else V).add((x, y))
    return Structure.build(TORUS_VOCAB, A.size, {'H': H, 'V': V})


def is_isomorphic(A, B):
    """Backtracking isomorphism search; small structures only"""
    if A.vocab != B.vocab or A.size != B.size:
        return False
    if any(len(A.relation(name)) != len(B.relation(name)) for name in A.vocab.names):
        return False
    facts_b = B.facts
    by_element = {a: [(name, tup) for name, tup in A.facts if a in tup] for a in A.domain}
    image = {}

    def consistent(a):
        for name, tup in by_element[a]:
            if all(e in image for e in tup) and (name, tuple(image[e] for e in tup)) not in facts_b:
                return False
        return True

    def extend(a):
        if a == A.size:
            return True
        used = set(image.values())
        for b in range(B.size):
            if b in used:
                continue
            image[a] = b
            if consistent(a) and extend(a + 1):
                return True
            del image[a]
        return False

    # equal fact counts make the forward image check sufficient
    return extend(0)


# ============ HOMOMORPHISM EXTRACTION ============

@dataclass(frozen=True)
class TorusHom:
    p: int
    q: int
    mapping: dict

    @property
    def square(self):
        """Side of the even square torus that also maps into the model"""
        return lcm(self.p, self.q, 2)

    def square_mapping(self):
        side = self.square
        return {(x, y): self.mapping[(x % self.p, y % self.q)] for x in range(side) for y in range(side)}


def _successor(edges, a, label):
    """The unique label-successor of a"""
    targets = [b for (x, b) in edges if x == a]
    if len(targets) != 1:
        raise InternalInvariantError(f"element {a} has {len(targets)} {label}-successors in a model of eta")
    return targets[0]


def extract_torus_hom(A):
    """Walk a finite model of eta until rows and columns repeat, then fold the grid into a torus"""
    if not evaluate(A, gen_eta()):
        raise PreconditionError("structure is not a model of eta")
    projected = star_projection(A)
    H, V = projected.relation('H'), projected.relation('V')
    hsucc = {a: _successor(H, a, 'H') for a in A.domain}
    vsucc = {a: _successor(V, a, 'V') for a in A.domain}
    start = min(a for (a,) in A.relation('E'))
    limit = A.size ** 2

    row = [start]
    while hsucc[row[-1]] not in row:
        row.append(hsucc[row[-1]])
        if len(row) > limit:
            raise InternalInvariantError("row walk did not close")
    i = row.index(hsucc[row[-1]])
    period = row[i:]

    rows = [tuple(period)]
    seen = {rows[0]: 0}
    while True:
        following = tuple(vsucc[a] for a in rows[-1])
        if following in seen:
            k = seen[following]
            break
        seen[following] = len(rows)
        rows.append(following)
        if len(rows) > limit:
            raise InternalInvariantError("column walk did not close")
    rows = rows[k:]
    p, q = len(period), len(rows)
    mapping = {(x, y): rows[y][x] for x in range(p) for y in range(q)}
    for (x, y), a in mapping.items():
        if (a, mapping[((x + 1) % p, y)]) not in H or (a, mapping[(x, (y + 1) % q)]) not in V:
            raise InternalInvariantError(f"extracted map breaks adjacency at cell ({x}, {y})")
    LOGGER.info("torus homomorphism %dx%d, square side %d", p, q, lcm(p, q, 2))
    return TorusHom(p, q, mapping)


# ============ TILINGS ============

def check_torus_tiling(ts, n, q=None):
    """Backtracking search for a tiling of the (n x q)-torus; element y*n + x -> tile"""
    p, q = n, (n if q is None else q)
    if p < 1 or q < 1:
        raise StructureError(f"torus dimensions must be positive, got {p}x{q}")
    tiles = list(ts)
    grid = {}

    def fits(x, y, tile):
        left = grid.get(((x - 1) % p, y))
        if left is not None and left.right != tile.left:
            return False
        below = grid.get((x, (y - 1) % q))
        if below is not None and below.top != tile.bottom:
            return False
        right = grid.get(((x + 1) % p, y))
        if right is not None and tile.right != right.left:
            return False
        above = grid.get((x, (y + 1) % q))
        return above is None or tile.top == above.bottom

    def place(index):
        if index == p * q:
            return True
        x, y = index % p, index // p
        for tile in tiles:
            if fits(x, y, tile):
                grid[(x, y)] = tile
                if place(index + 1):
                    return True
                del grid[(x, y)]
        return False

    if not place(0):
        LOGGER.debug("no tiling of the %dx%d torus", p, q)
        return None
    tiling = {y * p + x: tile for (x, y), tile in grid.items()}
    if not is_torus_tiling(tiling, p, q):
        raise InternalInvariantError("search returned a tiling with mismatched edges")
    return tiling


def is_torus_tiling(tiling, p, q=None):
    q = p if q is None else q
    for y in range(q):
        for x in range(p):
            tile = tiling[y * p + x]
            if tile.right != tiling[y * p + (x + 1) % p].left:
                return False
            if tile.top != tiling[((y + 1) % q) * p + x].bottom:
                return False
    return True


def decorate_encoding(A, tiling, ts):
    """Grid encoding plus one tile predicate per element"""
    if set(tiling) != set(A.domain):
        raise StructureError("tiling must cover exactly the elements of the encoding")
    facts = [(tile.predicate, (a,)) for a, tile in tiling.items()]
    return expand(A, ts.vocab, facts)


def tiling_model(ts, n) -> Optional[Structure]:
    """Model of eta plus the tiling formula built from a tiling of the (2n x 2n)-torus, if any"""
    tiling = check_torus_tiling(ts, 2 * n)
    if tiling is None:
        return None
    return decorate_encoding(build_grid_encoding(n), tiling, ts)
