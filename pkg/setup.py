"""Build the optional compiled kernels; the package works without them."""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
except ImportError:  # pure-Python install
    pass
else:
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("hiord._kernels", ["src/hiord/_kernels.pyx"],
                   include_dirs=[numpy.get_include()], extra_compile_args=["-O3"])],
        language_level=3,
    )

setup(ext_modules=ext_modules)
