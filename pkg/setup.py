import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [Extension("chiral_dimers._ckernels", ["src/chiral_dimers/_ckernels.pyx"],
                   include_dirs=[np.get_include()], extra_compile_args=["-O3"],
                   optional=True)],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
