import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "fracwave._kernels",
                ["src/fracwave/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

# The compiled core is optional: the package falls back to the pure
# NumPy kernels when the extension is absent.
setup(ext_modules=extensions)
