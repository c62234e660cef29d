"""Hot loops: machine simulation, window counting, prefix-code decoding.

The active backend is picked by :mod:`algodist._accel`.  Both backends stay
importable as ``kernels.nb`` / ``kernels.np`` for cross-checking and the
benchmark.
"""
from .._accel import HAVE_NUMBA, USE_NUMBA
from . import _np as np_backend

if HAVE_NUMBA:
    from . import _nb as nb_backend
else:  # pragma: no cover
    nb_backend = None

_active = nb_backend if USE_NUMBA else np_backend

tm_batch = _active.tm_batch
ca_batch = _active.ca_batch
tag_batch = _active.tag_batch
count_windows = _active.count_windows
canonical_decode = _active.canonical_decode

__all__ = [
    "tm_batch",
    "ca_batch",
    "tag_batch",
    "count_windows",
    "canonical_decode",
    "np_backend",
    "nb_backend",
]
