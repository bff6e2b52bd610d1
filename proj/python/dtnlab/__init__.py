"""Python surface of the dtn-lab numerical laboratory.

The heavy lifting lives in the compiled module `_dtnlab`; this package
re-exports it so `import dtnlab` works both from a wheel and from a CMake
build tree with PYTHONPATH pointing at the binary directory.
"""

from _dtnlab import *  # noqa: F401,F403
from _dtnlab import __doc__  # noqa: F401
