"""Kernel backend selection.

The compiled Cython core is preferred when importable; otherwise the numpy
fallback is used. `CROSSGRAPH_BACKEND=python` forces the fallback (useful for
benchmarks and for debugging kernel parity).
"""

import os

_forced = os.environ.get("CROSSGRAPH_BACKEND", "").strip().lower()

if _forced == "python":
    from . import _kernels_py as kernels
elif _forced in ("compiled", "cython"):
    from . import _kernels as kernels  # type: ignore[no-redef]
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]

COMPILED = bool(kernels.COMPILED)
NAME = "compiled" if COMPILED else "python"


def load_backend(name):
    """Import a backend module by name, independent of the default choice."""
    if name == "python":
        from . import _kernels_py
        return _kernels_py
    if name in ("compiled", "cython"):
        from . import _kernels  # raises ImportError when not built
        return _kernels
    raise ValueError(f"unknown backend {name!r} (expected 'python' or 'compiled')")


def available_backends():
    names = ["python"]
    try:
        load_backend("compiled")
        names.append("compiled")
    except ImportError:
        pass
    return names
