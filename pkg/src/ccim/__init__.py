"""Complex-valued hybrid digital/analog compute-in-memory macro simulator."""

from .cmacro import Macro, MacroConfig, WeightMemory, full_precision_reference, oracle_reference
from .numfmt import BitPartition, Complex8, Smf8

__version__ = "0.1.0"

__all__ = [
    "BitPartition",
    "Complex8",
    "Macro",
    "MacroConfig",
    "Smf8",
    "WeightMemory",
    "full_precision_reference",
    "oracle_reference",
]
