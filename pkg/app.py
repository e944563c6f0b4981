import argparse
import logging
import sys
from typing import Final

from modules.compress import compress_with_report
from modules.errors import ConfigError, InternalInvariantError, PreconditionError, Uf1Error
from modules.normal_form import expand_model, project_model, to_normal_form
from modules.solver import brute_force_sat, decide_sat
from modules.structures import evaluate, parse_structure, print_structure
from modules.syntax import node_count, parse_formula, parse_vocabulary, print_formula, validate_fragment
from modules.tiling import (build_grid_encoding, check_torus_tiling, decorate_encoding, extract_torus_hom,
                            gen_tiling_formula, parse_tiles, star_projection)
from modules.translate import (METHODS, equivalence_oracle, expand_star_centre, star_expansion_formula,
                               to_diagram_normal_form, to_foc2)
from utils.corpus import KINDS, generate
from utils.reports import frame_to_text, to_key_values
from utils.settings import load_settings

LOGGER: Final = logging.getLogger('uf1')

EXIT_OK: Final = 0
EXIT_NEGATIVE: Final = 1


class _Parser(argparse.ArgumentParser):
    """Usage errors surface as ConfigError (exit 64)"""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


# ============ IO HELPERS ============

def read_text(path):
    try:
        if path == '-':
            return sys.stdin.read()
        with open(path, 'r') as f:
            return f.read()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None


def write_text(path, text):
    if path is None or path == '-':
        sys.stdout.write(text)
        return
    try:
        with open(path, 'w') as f:
            f.write(text)
    except OSError as e:
        raise ConfigError(f"cannot write {path}: {e.strerror}") from None
    LOGGER.info("wrote %s", path)


def emit(record):
    sys.stdout.write(to_key_values(record))


def load_formula(args):
    vocab = parse_vocabulary(args.vocab) if getattr(args, 'vocab', None) else None
    return parse_formula(read_text(args.formula), vocab)


def load_model(path):
    return parse_structure(read_text(path))


def parse_assignment(text):
    """'x=0,y=2' -> {'x': 0, 'y': 2}"""
    assignment = {}
    for chunk in filter(None, (c.strip() for c in (text or '').split(','))):
        name, _, value = chunk.partition('=')
        if not value.strip().isdigit():
            raise ConfigError(f"assignment entries look like x=0, got {chunk!r}")
        assignment[name.strip()] = int(value)
    return assignment


# ============ SUBCOMMANDS ============

def cmd_check(args, settings):
    phi = load_formula(args)
    report = validate_fragment(phi, allow_counting=args.counting)
    emit({'verdict': report.verdict, 'fragment': report.fragment, 'violations': len(report.violations)})
    for violation in report.violations:
        LOGGER.info("%s at %s: %s", violation.rule, violation.as_record()['location'], violation.detail)
    if args.table:
        sys.stdout.write(frame_to_text(report.violations_frame()))
    return EXIT_OK if report.member else EXIT_NEGATIVE


def cmd_normalize(args, settings):
    nf = to_normal_form(load_formula(args))
    emit({'m_exists': nf.m_exists, 'm_forall': nf.m_forall, 'width': nf.width, 'size': nf.size,
          'fresh': len(nf.fresh_symbols)})
    if args.emit_nf:
        write_text(args.emit_nf, print_formula(nf.to_formula()) + '\n')
    return EXIT_OK


def _report_sat(result, args):
    emit({'verdict': result.verdict.value, 'explored_bound': result.explored_bound,
          'witness_size': result.witness.size if result.witness is not None else None})
    if args.stats:
        sys.stdout.write(frame_to_text(result.summary_frame()))
    if args.emit_model and result.witness is not None:
        write_text(args.emit_model, print_structure(result.witness))
    return result.exit_code


def cmd_sat(args, settings):
    result = decide_sat(load_formula(args), cap=settings.cap, jobs=settings.jobs)
    return _report_sat(result, args)


def cmd_brute_sat(args, settings):
    result = brute_force_sat(load_formula(args), args.max_size or settings.brute_max_size)
    return _report_sat(result, args)


def cmd_model_check(args, settings):
    phi = load_formula(args)
    holds = evaluate(load_model(args.model), phi, parse_assignment(args.assign))
    emit({'holds': holds})
    return EXIT_OK if holds else EXIT_NEGATIVE


def cmd_compress(args, settings):
    phi = load_formula(args)
    nf = to_normal_form(phi)
    A = load_model(args.model)
    over_nf = all(name in A.vocab for name in nf.vocab.names)
    if not over_nf:
        if not evaluate(A, phi):
            raise PreconditionError("the model does not satisfy the formula")
        A = expand_model(A, nf)
    result = compress_with_report(A, nf)
    output = result.structure if over_nf else project_model(result.structure, nf)
    emit({'source_size': A.size, 'size': result.structure.size, 'court_size': len(result.court.court),
          'kings': len(result.court.kings), 'completions': result.completions, 'conflicts': len(result.conflicts)})
    if args.trace:
        sys.stdout.write(frame_to_text(result.court.members_frame()))
        sys.stdout.write(frame_to_text(result.provenance_frame()))
        sys.stdout.write(frame_to_text(result.trace_frame()))
    write_text(args.out, print_structure(output))
    return EXIT_OK


def cmd_translate(args, settings):
    phi = load_formula(args)
    limit = args.max_nodes or settings.translate_node_limit
    if node_count(phi) > limit and not args.force:
        raise ConfigError(f"formula has {node_count(phi)} nodes, above the limit {limit}; pass --force to go on")
    if args.to == 'foc2':
        result = to_foc2(phi, method=args.method)
    elif args.to == 'diagram':
        result = to_diagram_normal_form(phi)
    else:
        result = star_expansion_formula(expand_star_centre(phi))
    record = {'target': args.to, 'nodes': node_count(result)}
    if args.verify is not None:
        size = args.verify or settings.verify_size
        if not 1 <= size <= 4:
            raise ConfigError(f"--verify must be in [1, 4], got {size}")
        verdict = equivalence_oracle(phi, result, size)
        record['verify'] = verdict.verdict
        if not verdict.equivalent:
            emit(record)
            sys.stderr.write(print_structure(verdict.counterexample))
            raise InternalInvariantError(f"translation differs from its input under {verdict.assignment}")
    record['formula'] = print_formula(result)
    emit(record)
    return EXIT_OK


def cmd_gen_tiling(args, settings):
    ts = parse_tiles(read_text(args.tiles))
    phi = gen_tiling_formula(ts)
    emit({'tiles': len(ts), 'conjuncts': len(phi.parts), 'nodes': node_count(phi)})
    write_text(args.out, print_formula(phi) + '\n')
    return EXIT_OK


def cmd_gen_grid(args, settings):
    A = build_grid_encoding(args.n)
    if args.tiles:
        ts = parse_tiles(read_text(args.tiles))
        tiling = check_torus_tiling(ts, 2 * args.n)
        if tiling is None:
            emit({'verdict': 'no-tiling', 'n': args.n})
            return EXIT_NEGATIVE
        A = decorate_encoding(A, tiling, ts)
    emit({'n': args.n, 'size': A.size})
    write_text(args.out, print_structure(A))
    return EXIT_OK


def cmd_project(args, settings):
    projected = star_projection(load_model(args.model))
    emit({'size': projected.size, 'H': len(projected.relation('H')), 'V': len(projected.relation('V'))})
    write_text(args.out, print_structure(projected))
    return EXIT_OK


def cmd_extract_hom(args, settings):
    A = load_model(args.model)
    if args.formula and not evaluate(A, parse_formula(read_text(args.formula))):
        raise PreconditionError("the model does not satisfy the given formula")
    hom = extract_torus_hom(A)
    emit({'p': hom.p, 'q': hom.q, 'square': hom.square})
    sys.stdout.write(''.join(f"h({x},{y})={a}\n" for (x, y), a in sorted(hom.mapping.items())))
    return EXIT_OK


def cmd_corpus(args, settings):
    for phi in generate(args.kind, args.count, seed=settings.seed, max_nodes=args.max_nodes):
        sys.stdout.write(print_formula(phi) + '\n')
    return EXIT_OK


# ============ PARSER ============

def build_parser():
    parser = _Parser(prog='uf1', description="Uniform one-dimensional fragment toolkit")
    parser.add_argument('-v', '--verbose', action='count', default=0, help="More logging (repeatable)")
    parser.add_argument('--jobs', type=int, default=None, help="Worker processes for the solver")
    parser.add_argument('--seed', type=int, default=None, help="Seed for generated corpora")
    sub = parser.add_subparsers(dest='command', required=True)

    def command(name, handler, help_text, formula=True):
        p = sub.add_parser(name, help=help_text)
        if formula:
            p.add_argument('--formula', required=True, help="Formula file ('-' for stdin)")
            p.add_argument('--vocab', default=None, help="Vocabulary like 'R/3, E/1'")
        p.set_defaults(handler=handler)
        return p

    p = command('check', cmd_check, "Decide fragment membership")
    p.add_argument('--counting', action='store_true', help="Allow counting quantifiers")
    p.add_argument('--table', action='store_true', help="Print the violation table")

    p = command('normalize', cmd_normalize, "Compute the normal form of a sentence")
    p.add_argument('--emit-nf', default=None, help="Write the normal form ('-' for stdout)")

    for name, handler, help_text in (('sat', cmd_sat, "Bounded satisfiability search"),
                                     ('brute-sat', cmd_brute_sat, "Exhaustive search for small models")):
        p = command(name, handler, help_text)
        p.add_argument('--emit-model', default=None, help="Write the witness structure")
        p.add_argument('--stats', action='store_true', help="Print per-size search statistics")
        if name == 'sat':
            p.add_argument('--cap', type=int, default=None, help="Largest domain size to try")
        else:
            p.add_argument('--max-size', type=int, default=None, help="Largest domain size to try")

    p = command('model-check', cmd_model_check, "Evaluate a formula in a structure")
    p.add_argument('--model', required=True)
    p.add_argument('--assign', default=None, help="Free variable values like x=0,y=1")

    p = command('compress', cmd_compress, "Shrink a model to the small-model bound")
    p.add_argument('--model', required=True)
    p.add_argument('--out', default=None)
    p.add_argument('--trace', action='store_true', help="Dump court, provenance and construction steps")

    p = command('translate', cmd_translate, "Translate into FOC2, diagram normal form or star-centre types")
    p.add_argument('--to', choices=['foc2', 'diagram', 'stars'], default='foc2')
    p.add_argument('--method', choices=list(METHODS), default='star', help="Off-centre handling for --to foc2")
    p.add_argument('--verify', type=int, nargs='?', const=0, default=None,
                   help="Check equivalence up to this domain size (UF1_VERIFY_SIZE when bare)")
    p.add_argument('--max-nodes', type=int, default=None, help="Input size guard")
    p.add_argument('--force', action='store_true', help="Ignore the input size guard")

    p = command('gen-tiling', cmd_gen_tiling, "Tiling formula for a tile set", formula=False)
    p.add_argument('--tiles', required=True)
    p.add_argument('--out', default=None)

    p = command('gen-grid', cmd_gen_grid, "Grid encoding of the (2n x 2n)-torus", formula=False)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--tiles', default=None, help="Decorate with a tiling of the torus")
    p.add_argument('--out', default=None)

    p = command('project', cmd_project, "Project an {R, E} structure onto {H, V}", formula=False)
    p.add_argument('--model', required=True)
    p.add_argument('--out', default=None)

    p = command('extract-hom', cmd_extract_hom, "Torus homomorphism from a model of eta", formula=False)
    p.add_argument('--model', required=True)
    p.add_argument('--formula', default=None, help="Formula the model must satisfy")

    p = command('corpus', cmd_corpus, "Print the seeded random corpus", formula=False)
    p.add_argument('--kind', choices=KINDS, default='uf1')
    p.add_argument('--count', type=int, default=10)
    p.add_argument('--max-nodes', type=int, default=30)
    return parser


def configure_logging(level):
    logging.basicConfig(stream=sys.stderr, level=level, format='%(levelname)s %(name)s: %(message)s', force=True)


def run(argv=None):
    """Parse argv, run one subcommand, return its exit code"""
    try:
        settings = load_settings()
        args = build_parser().parse_args(argv)
        verbosity = {1: 'INFO', 2: 'DEBUG'}.get(min(args.verbose, 2), settings.log_level)
        settings = settings.override(jobs=args.jobs, seed=args.seed, cap=getattr(args, 'cap', None),
                                     log_level=verbosity)
        configure_logging(settings.log_level)
        return args.handler(args, settings)
    except Uf1Error as e:
        sys.stderr.write(f"error: {e}\n")
        return e.exit_code


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
