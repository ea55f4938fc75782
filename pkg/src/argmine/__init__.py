"""argmine: local argument-mining workbench for student essays.

Segments essays into argument components, classifies each component's type
and quality by prompting a locally hosted LLM, and evaluates predictions
against gold annotations with span-overlap matching and BIO token F1.
"""

__version__ = "0.1.0"

from .labels import ECHEC, ArgType, QualityLabel
from .prompts import TaskKind

__all__ = ["ArgType", "QualityLabel", "TaskKind", "ECHEC", "__version__"]
