"""Build script for the optional compiled kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time); building it just makes the inner loops faster. Rebuild in
place with:

    python setup.py build_ext --inplace
"""

import logging

from setuptools import setup
from setuptools.errors import CCompilerError, ExecError, PlatformError

log = logging.getLogger(__name__)

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "ecolisim._kernels._speedups",
                sources=["src/ecolisim/_kernels/_speedups.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    log.warning("Cython or NumPy unavailable; building without compiled kernels")


def run_setup(with_ext):
    setup(ext_modules=ext_modules if with_ext else [])


try:
    run_setup(bool(ext_modules))
except (CCompilerError, ExecError, PlatformError):
    log.warning("compiler failed; retrying without compiled kernels")
    run_setup(False)
