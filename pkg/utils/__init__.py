# UF1= Toolkit Utils
from .settings import Settings, load_settings
from .reports import frame_to_text, to_key_values
from .corpus import FormulaGenerator, generate

__all__ = [
    'Settings',
    'load_settings',
    'frame_to_text',
    'to_key_values',
    'FormulaGenerator',
    'generate'
]
