"""TCP-aware backpressure routing and scheduling, simulated in slotted time."""
import os as _os

if _os.environ.get("TCPBP_PURE"):
    # Load every tcpbp module from source, bypassing compiled builds.
    import importlib.machinery as _m
    import sys as _sys

    for _d in (_os.path.dirname(__file__), _os.path.join(_os.path.dirname(__file__), "sim")):
        _sys.path_importer_cache[_d] = _m.FileFinder(
            _d, (_m.SourceFileLoader, _m.SOURCE_SUFFIXES)
        )

__version__ = "0.1.0"
