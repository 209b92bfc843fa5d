"""Kernel selection: compiled Cython stepper when available, Python twin otherwise.

Set IMPULSEDUFF_FORCE_PY=1 to force the pure-Python kernel (used by the
benchmark and by tests that compare the two implementations).
"""

import os

from . import _dp54_py

OK = _dp54_py.OK
ESCAPED = _dp54_py.ESCAPED
UNDERFLOW = _dp54_py.UNDERFLOW
ORIGIN = _dp54_py.ORIGIN

if os.environ.get("IMPULSEDUFF_FORCE_PY") == "1":
    _backend = _dp54_py
    BACKEND = "python"
else:
    try:
        from . import _dp54_cy as _backend
        BACKEND = "cython"
    except ImportError:
        _backend = _dp54_py
        BACKEND = "python"

integrate_segment = _backend.integrate_segment
integrate_segment_py = _dp54_py.integrate_segment
