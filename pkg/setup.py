import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("SAFEGUARD_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("safeguard._geokernel", ["src/safeguard/_geokernel.pyx"])],
        language_level=3,
    )

setup(ext_modules=ext_modules)
