"""Exception hierarchy shared by all modules"""


class Uf1Error(Exception):
    """Base class for toolkit errors"""

    exit_code = 65


class FormulaSyntaxError(Uf1Error):
    """Formula text could not be parsed"""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class VocabularyError(Uf1Error):
    """Unknown relation symbol or arity mismatch"""


class StructureError(Uf1Error):
    """Malformed structure: bounds, arity or duplicate declarations"""


class FragmentError(Uf1Error):
    """Input lies outside the fragment an operation requires"""


class EvaluationError(Uf1Error):
    """Evaluation was asked something it cannot answer"""


class PreconditionError(Uf1Error):
    """A semantic precondition (e.g. A |= phi) does not hold"""


class TranslationError(Uf1Error):
    """Input does not have the shape a translation step expects"""


class ConfigError(Uf1Error):
    """Bad setting in the environment or on the command line"""

    exit_code = 64


class InternalInvariantError(Uf1Error):
    """A guarantee of a construction was broken; always a bug"""

    exit_code = 70


class TileSetError(Uf1Error):
    """Malformed tile set or tile file"""
