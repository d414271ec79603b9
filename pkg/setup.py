import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("ZIGLIN_NO_EXTENSION"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension(
                "ziglin._kernel",
                ["src/ziglin/_kernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
