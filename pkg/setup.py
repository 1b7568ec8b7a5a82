from setuptools import setup

# The propagation kernel has a Cython variant for speed.  Building it is
# optional: without Cython (or a C compiler) the pure-Python kernel in
# lazycasp._pycore is used instead, selected at import time.
import os

ext_modules = []
if os.path.exists("src/lazycasp/_ckern.pyx"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            "src/lazycasp/_ckern.pyx",
            language_level=3,
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
