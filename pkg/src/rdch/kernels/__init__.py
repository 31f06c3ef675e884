"""Hot-kernel backend selection.

The compiled driver is preferred when the extension built; the numpy
reference implementation is the fallback.  Set RDCH_PURE_PYTHON=1 to force
the fallback (used by the equivalence tests and the benchmark).
"""

import os

from . import pure

_force_pure = os.environ.get("RDCH_PURE_PYTHON", "") not in ("", "0")

if not _force_pure:
    try:
        from . import _fast
    except ImportError:
        _fast = None
else:
    _fast = None

if _fast is not None:
    BACKEND = "compiled"
    advance_explicit = _fast.advance_explicit
else:
    BACKEND = "pure"
    advance_explicit = pure.advance_explicit

STATUS_OK = pure.STATUS_OK
STATUS_FP_FAIL = pure.STATUS_FP_FAIL
STATUS_DT_UNDERFLOW = pure.STATUS_DT_UNDERFLOW
STATUS_NONFINITE = pure.STATUS_NONFINITE
STATUS_DOMAIN = pure.STATUS_DOMAIN


def compiled_available() -> bool:
    if _fast is not None:
        return True
    if _force_pure:
        try:
            from . import _fast as probe  # noqa: F401
            return True
        except ImportError:
            return False
    return False


def get_backend(name: str):
    """Return a module exposing advance_explicit for 'compiled' or 'pure'."""
    if name == "pure":
        return pure
    if name == "compiled":
        from . import _fast as mod
        return mod
    raise ValueError(f"unknown kernel backend {name!r}")
