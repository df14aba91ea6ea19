import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("SNLEVY_PURE_PYTHON"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        npyrandom_dir = os.path.abspath(
            os.path.join(np.get_include(), "..", "..", "random", "lib")
        )
        ext_modules = cythonize(
            [
                Extension(
                    "snlevy._native",
                    ["src/snlevy/_native.pyx"],
                    include_dirs=[np.get_include()],
                    library_dirs=[npyrandom_dir],
                    libraries=["npyrandom"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
