from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # No Cython at build time: install the pure-Python fallback only.
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "spectralperc._kernels",
                ["src/spectralperc/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
