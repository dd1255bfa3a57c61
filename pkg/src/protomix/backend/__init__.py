"""Kernel backend selection.

At import time the compiled Cython kernels (`_fastops`) are preferred; when
the extension is unavailable the numpy fallback (`pyops`) is used.  Selection
can be forced with the environment variable ``PROTOMIX_BACKEND`` set to
``python`` or ``cython`` (``auto`` is the default), or at runtime with
:func:`select` — used by the benchmark and the backend-parity tests.

Client modules access kernels as ``backend.ops.<kernel>`` so a runtime
switch is visible everywhere.
"""

import os

from . import pyops
from ..errors import ConfigError

try:
    from . import _fastops
except ImportError:
    _fastops = None

_BACKENDS = {"python": pyops}
if _fastops is not None:
    _BACKENDS["cython"] = _fastops


def _initial():
    requested = os.environ.get("PROTOMIX_BACKEND", "auto").lower()
    if requested == "auto":
        return _fastops if _fastops is not None else pyops
    if requested not in _BACKENDS:
        available = ", ".join(sorted(_BACKENDS) + ["auto"])
        raise ConfigError(
            f"PROTOMIX_BACKEND={requested!r} not available (choose from {available})"
        )
    return _BACKENDS[requested]


ops = _initial()


def backend_name():
    """Name of the active backend: 'python' or 'cython'."""
    return ops.NAME


def available_backends():
    return sorted(_BACKENDS)


def select(name):
    """Switch the active backend; returns the previous backend name."""
    global ops
    if name not in _BACKENDS:
        raise ConfigError(
            f"backend {name!r} not available (have: {', '.join(sorted(_BACKENDS))})"
        )
    previous = ops.NAME
    ops = _BACKENDS[name]
    return previous
