import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off keeps the split-quality arithmetic bit-identical to the
# numpy fallback (no fused multiply-add), which the parity tests rely on.
ext = Extension(
    "driftloc._kernels._speedups",
    ["src/driftloc/_kernels/_speedups.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    extra_compile_args=["-O3", "-ffp-contract=off"],
)

setup(ext_modules=cythonize([ext], compiler_directives={"language_level": "3"}))
