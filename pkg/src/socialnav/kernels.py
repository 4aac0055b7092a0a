"""Backend selection for the hot loops.

The compiled extension is used when importable; set ``SOCIALNAV_PURE=1`` to
force the numpy/heapq fallback.
"""

import os

BACKEND = "python"

if os.environ.get("SOCIALNAV_PURE", "") not in ("1", "true", "yes"):
    try:
        from ._kernels import astar, field_values, rasterize_max  # noqa: F401
        BACKEND = "cython"
    except ImportError:
        pass

if BACKEND == "python":
    from ._fallback import astar, field_values, rasterize_max  # noqa: F401
