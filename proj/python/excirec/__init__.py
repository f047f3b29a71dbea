"""Exciton near-field spectroscopy toolkit.

Thin re-export of the compiled core. Installed builds place the native
module inside this package; development builds leave it in the CMake build
directory, which must then be on PYTHONPATH.
"""

try:
    from ._excirec import *  # noqa: F401,F403
except ImportError:
    from _excirec import *  # noqa: F401,F403
