"""Hot-kernel backend selection.

The compiled extension is preferred when it imported cleanly; the numpy
fallback is used otherwise, or when ``DRIFTLOC_PURE`` is set in the
environment. ``use()`` rebinds the module-level functions, which callers
look up at call time, so tests and benchmarks can switch backends.
"""

from __future__ import annotations

import os

from . import pure

try:
    from . import _speedups as compiled
except ImportError:  # extension not built
    compiled = None

_KERNEL_NAMES = ("best_split", "eval_threshold", "predict_tree", "simulate_path")


def use(backend) -> None:
    """Bind kernels from ``backend`` ('pure', 'compiled', or a module)."""
    if backend == "pure":
        backend = pure
    elif backend == "compiled":
        if compiled is None:
            raise RuntimeError("compiled kernels are not available")
        backend = compiled
    elif isinstance(backend, str):
        raise ValueError(f"unknown backend {backend!r}")
    for name in _KERNEL_NAMES:
        globals()[name] = getattr(backend, name)
    globals()["_active"] = backend


def active_backend() -> str:
    return "compiled" if _active is compiled else "pure"


_active = pure
use(compiled if compiled is not None and not os.environ.get("DRIFTLOC_PURE") else pure)
