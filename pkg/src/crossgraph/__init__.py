"""Cross-modal heterogeneous-graph reasoning on synthetic multiple-choice
tasks, built on a small tape-based autodiff core.

The compute kernels come from a compiled Cython extension when built, with a
pure-numpy fallback selected at import (`crossgraph.backend.NAME` says which).
"""

from .backend import COMPILED, NAME as BACKEND_NAME

__version__ = "0.1.0"

__all__ = ["COMPILED", "BACKEND_NAME", "__version__"]
