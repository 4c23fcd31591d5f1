"""Select the compiled kernels when available, else the numpy fallback.

Set ``DROPCAL_PURE_PYTHON=1`` to force the fallback.
"""

import os

from dropcal import _pykernels

BACKEND = "python"
kernels = _pykernels

if os.environ.get("DROPCAL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from dropcal import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        kernels = _ckernels
        BACKEND = "cython"
