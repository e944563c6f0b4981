# UF1= Toolkit Modules
from .syntax import Vocabulary, parse_formula, print_formula, validate_fragment
from .structures import Structure, evaluate, parse_structure, print_structure
from .normal_form import NormalForm, to_normal_form
from .solver import Verdict, brute_force_sat, decide_sat
from .compress import compress_model
from .translate import equivalence_oracle, to_diagram_normal_form, to_foc2
from .tiling import TileSet, build_grid_encoding, gen_eta, gen_tiling_formula

__all__ = [
    'Vocabulary',
    'parse_formula',
    'print_formula',
    'validate_fragment',
    'Structure',
    'evaluate',
    'parse_structure',
    'print_structure',
    'NormalForm',
    'to_normal_form',
    'Verdict',
    'brute_force_sat',
    'decide_sat',
    'compress_model',
    'equivalence_oracle',
    'to_diagram_normal_form',
    'to_foc2',
    'TileSet',
    'build_grid_encoding',
    'gen_eta',
    'gen_tiling_formula'
]
