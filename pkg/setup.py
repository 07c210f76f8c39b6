"""Build script: compiles the optional MLP kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile only costs speed, not functionality.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    extensions = cythonize(
        [Extension("hann._mlp_core", ["src/hann/_mlp_core.pyx"],
                   include_dirs=[np.get_include()])],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
