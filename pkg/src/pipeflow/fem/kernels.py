"""Kernel backend selection: compiled extension with numpy fallback.

The compiled backend is preferred when importable; set PIPEFLOW_KERNELS to
``py`` or ``cy`` to force one side (``cy`` raises if the extension is
missing).  Both backends share the array contract of ``_kernels_np``.
"""

import os

from . import _kernels_np

try:
    from . import _kernels_cy
except ImportError:
    _kernels_cy = None


def available_backends():
    names = ["py"]
    if _kernels_cy is not None:
        names.append("cy")
    return names


def _resolve(name: str):
    if name == "py":
        return _kernels_np
    if name == "cy":
        if _kernels_cy is None:
            raise ImportError("compiled kernel backend is not built")
        return _kernels_cy
    if name == "auto":
        return _kernels_cy if _kernels_cy is not None else _kernels_np
    raise ValueError(f"unknown kernel backend {name!r}")


_active = _resolve(os.environ.get("PIPEFLOW_KERNELS", "auto"))


def get_backend():
    return _active


def backend_name() -> str:
    return "cy" if _active is _kernels_cy else "py"


def set_backend(name: str):
    """Switch backends at runtime (tests and benchmarks)."""
    global _active
    _active = _resolve(name)
    return _active
