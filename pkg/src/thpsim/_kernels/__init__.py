"""Hot scheduling kernel with a compiled implementation and a numpy fallback.

The compiled extension is used when it was built and ``THPSIM_PURE_PYTHON`` is
not set; ``BACKEND`` names the implementation in use.
"""

import os

from . import _fallback

fallback_greedy_batch = _fallback.greedy_batch
compiled_greedy_batch = None

if not os.environ.get("THPSIM_PURE_PYTHON"):
    try:
        from ._greedy import greedy_batch as compiled_greedy_batch
    except ImportError:  # extension not built
        compiled_greedy_batch = None

if compiled_greedy_batch is not None:
    greedy_batch = compiled_greedy_batch
    BACKEND = "cython"
else:
    greedy_batch = fallback_greedy_batch
    BACKEND = "python"

__all__ = ["greedy_batch", "fallback_greedy_batch", "compiled_greedy_batch", "BACKEND"]
