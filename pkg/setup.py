# Builds the compiled core: the hand-written scheduling kernel plus Cython
# compilations of the pure-Python per-slot modules. Everything still imports
# without them (tcpbp.kernel falls back to _pykernel.py, the other modules
# load from source), and TCPBP_PURE=1 forces that fallback at runtime.
import numpy as np
from setuptools import Extension, setup

# modules on the per-slot path; compiled from their .py sources unchanged
ACCELERATED = ["sim/engine", "transport", "netcode", "scheduler", "queueing"]

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    kernel = cythonize(
        [
            Extension(
                "tcpbp._ckernel",
                ["src/tcpbp/_ckernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
    accelerated = cythonize(
        [
            Extension("tcpbp." + m.replace("/", "."), [f"src/tcpbp/{m}.py"],
                      extra_compile_args=["-O2"])
            for m in ACCELERATED
        ],
        compiler_directives={
            "language_level": "3",
            # keep Python semantics: annotations are documentation only
            "annotation_typing": False,
            "binding": True,
        },
    )
    ext_modules = kernel + accelerated

setup(ext_modules=ext_modules)
