from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "uwsnsim._kernels._core",
        ["src/uwsnsim/_kernels/_core.pyx"],
        # No -ffast-math: the pure-python backend must stay bit-identical.
        extra_compile_args=["-O3"],
    )
]

if cythonize is not None:
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
else:
    # Without Cython the package still installs; the pure backend is used.
    ext_modules = []

setup(ext_modules=ext_modules)
