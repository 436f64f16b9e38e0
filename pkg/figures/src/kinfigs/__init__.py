"""kinfigs: publication-style figures from the parakin solver's CSV files.

Coupled to the documented CSV schemas only, never to solver internals.
"""

from .figures import KINDS, FigureSpec, render
from .schema import SchemaError

__version__ = "0.1.0"
