"""Backend selection for the evaluation loop.

The compiled extension is used when it imports; otherwise the pure-Python
port.  Set ``GAITEVO_BACKEND=python`` to force the fallback.
"""

import os

from . import _kernel_py

BACKENDS = {"python": _kernel_py}

try:
    from . import _kernel_c
except ImportError:  # extension not built
    _kernel_c = None
else:
    BACKENDS["cython"] = _kernel_c

_requested = os.environ.get("GAITEVO_BACKEND", "").strip().lower()
if _requested and _requested not in BACKENDS:
    raise ImportError(f"GAITEVO_BACKEND={_requested!r} is not available; have {sorted(BACKENDS)}")

BACKEND = _requested or ("cython" if "cython" in BACKENDS else "python")
_impl = BACKENDS[BACKEND]


def get_backend(name=None):
    """Module implementing ``simulate`` and ``body_rollout``."""
    if name is None:
        return _impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {sorted(BACKENDS)}") from None


def simulate(*args, backend=None):
    return get_backend(backend).simulate(*args)


def body_rollout(*args, backend=None):
    return get_backend(backend).body_rollout(*args)
