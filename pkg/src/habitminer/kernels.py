"""Backend selection for the random-walk kernel.

The compiled extension is used when it was built; otherwise the NumPy
fallback is loaded. Set ``HABITMINER_BACKEND=python`` to force the fallback.
"""

import os

from . import _walk_py

try:
    from . import _walk_ext
except ImportError:  # extension not built
    _walk_ext = None

BACKENDS = {"python": _walk_py.walk}
if _walk_ext is not None:
    BACKENDS["cython"] = _walk_ext.walk

_requested = os.environ.get("HABITMINER_BACKEND", "").strip().lower()
if _requested and _requested not in BACKENDS:
    raise ImportError(f"HABITMINER_BACKEND={_requested!r} is not available; have {sorted(BACKENDS)}")
BACKEND = _requested or ("cython" if "cython" in BACKENDS else "python")
walk = BACKENDS[BACKEND]
