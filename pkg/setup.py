from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "fakesafe.backends._ckernels",
                ["src/fakesafe/backends/_ckernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    # Pure-python install; the numpy kernel fallback is selected at import.
    ext_modules = []

setup(ext_modules=ext_modules)
