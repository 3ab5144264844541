"""Hot kernels, compiled when available.

The Cython extension is used if it was built; set ``FVKIT_PURE_PYTHON=1``
to force the numpy fallback. ``BACKEND`` names the active implementation.
Bit-mask kernels are limited to 64 events; :func:`for_events` falls back to
Python for larger problems where masks do not fit in ``uint64``.
"""
import importlib
import os

from fvkit._kernels import _pykernels


def _load_compiled():
    if os.environ.get("FVKIT_PURE_PYTHON", "") in ("1", "true", "yes"):
        return None
    try:
        return importlib.import_module("fvkit._kernels._ckernels")
    except ImportError:
        return None


_ckernels = _load_compiled()

impl = _ckernels if _ckernels is not None else _pykernels
BACKEND = "cython" if _ckernels is not None else "python"


def for_events(n_events):
    return impl if n_events <= 64 else _pykernels


failure_table = impl.failure_table
minimal_states = impl.minimal_states
state_sums = impl.state_sums
inclusion_exclusion = impl.inclusion_exclusion
absorb = impl.absorb
