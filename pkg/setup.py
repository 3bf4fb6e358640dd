from setuptools import Extension, setup
from Cython.Build import cythonize

setup(
    ext_modules=cythonize(
        [Extension("gampcs._kernels", ["src/gampcs/_kernels.pyx"],
                   extra_compile_args=["-O3", "-march=native", "-fopenmp"],
                   extra_link_args=["-fopenmp"])],
        language_level=3,
    )
)
