"""Backend selection for the hot kernels.

Imports the compiled extension when available and falls back to the pure
NumPy/Python implementation otherwise. Both backends are bit-compatible;
the compiled one is just faster (see benchmarks/bench_backends.py).

Set CHAINBOOST_BACKEND=py or =c to force a backend; forcing ``c`` when the
extension is missing raises at import time.
"""

import os

_requested = os.environ.get("CHAINBOOST_BACKEND", "auto").lower()

if _requested not in ("auto", "c", "py"):
    raise ImportError(f"CHAINBOOST_BACKEND must be 'auto', 'c' or 'py', got {_requested!r}")

if _requested == "py":
    from . import _kernels_py as _impl

    BACKEND = "py"
else:
    try:
        from . import _kernels_c as _impl

        BACKEND = "c"
    except ImportError:
        if _requested == "c":
            raise
        from . import _kernels_py as _impl

        BACKEND = "py"

hash_token = _impl.hash_token
featurize = _impl.featurize
nb_accumulate = _impl.nb_accumulate
sgd_epoch = _impl.sgd_epoch
stump_scan = _impl.stump_scan


def get_backends():
    """Return {name: module} for every importable backend."""
    from . import _kernels_py

    backends = {"py": _kernels_py}
    try:
        from . import _kernels_c

        backends["c"] = _kernels_c
    except ImportError:
        pass
    return backends
