"""Read-only plotting layer for tweezertransport CSV outputs."""

from .figures import RENDERERS, render
from .loading import SchemaError

__all__ = ["render", "RENDERERS", "SchemaError"]
__version__ = "0.1.0"
