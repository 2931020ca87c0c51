"""Builds the optional compiled kernels; the package works without them."""
from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:  # no Cython: pure-Python kernels only
    pass
else:
    ext_modules = cythonize(
        [Extension("ucran._core", ["src/ucran/_core.pyx"], include_dirs=[numpy.get_include()],
                   define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                   language="c++", optional=True)],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
