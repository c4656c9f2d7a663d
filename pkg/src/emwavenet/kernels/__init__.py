"""Hot-kernel backend selection.

The compiled Cython module is preferred when it importable; otherwise the
NumPy fallback provides identical semantics. Set EMWAVENET_NO_EXT=1 to
force the fallback (used by the benchmark and the parity tests).
"""

import os

from . import _fallback

if os.environ.get("EMWAVENET_NO_EXT"):
    _impl = _fallback
    BACKEND = "numpy"
else:
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "numpy"

modulate = _impl.modulate
modulation_backward = _impl.modulation_backward
adam_update = _impl.adam_update


def backend_name() -> str:
    """Name of the kernel backend selected at import: 'cython' or 'numpy'."""
    return BACKEND
