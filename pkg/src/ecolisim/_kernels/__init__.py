"""Kernel backend selection.

The compiled extension is preferred when present; the NumPy lane is the
fallback. Set ``ECOLISIM_KERNELS=numpy`` or ``ECOLISIM_KERNELS=compiled``
to force a lane (forcing ``compiled`` without the built extension is an
import error).
"""

import logging
import os

logger = logging.getLogger(__name__)

_choice = os.environ.get("ECOLISIM_KERNELS", "").strip().lower()
if _choice not in ("", "auto", "numpy", "compiled"):
    raise ImportError(
        f"ECOLISIM_KERNELS={_choice!r} not understood; use 'numpy' or 'compiled'"
    )

if _choice == "numpy":
    from . import _numpy_impl as _impl
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _choice == "compiled":
            raise ImportError(
                "ECOLISIM_KERNELS=compiled but the extension is not built; "
                "run 'python setup.py build_ext --inplace'"
            ) from None
        from . import _numpy_impl as _impl
        logger.debug("compiled kernels unavailable; using NumPy lane")

BACKEND = _impl.BACKEND
tridiag_solve = _impl.tridiag_solve
laplacian_1d = _impl.laplacian_1d
laplacian_2d = _impl.laplacian_2d
chemo_div_1d = _impl.chemo_div_1d
chemo_div_2d = _impl.chemo_div_2d
max_face_speed_1d = _impl.max_face_speed_1d
max_face_speed_2d = _impl.max_face_speed_2d

__all__ = [
    "BACKEND",
    "tridiag_solve",
    "laplacian_1d",
    "laplacian_2d",
    "chemo_div_1d",
    "chemo_div_2d",
    "max_face_speed_1d",
    "max_face_speed_2d",
]
