"""Hot kernels, compiled when available.

The Cython extension ``_kernels`` is used if it imports; otherwise the
numpy implementations in ``_pykernels`` are used. Set ``RANGZEN_PURE=1`` to
force the fallback.
"""

import os

from . import _pykernels as pure

compiled = None
if os.environ.get("RANGZEN_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled  # type: ignore[no-redef]
    except ImportError:  # extension not built
        compiled = None

_impl = compiled if compiled is not None else pure
BACKEND = "cython" if compiled is not None else "python"

gillespie_lux = _impl.gillespie_lux
range_pairs = _impl.range_pairs
temporal_hops = _impl.temporal_hops
cover_mask = _impl.cover_mask
uniform_stream = _impl.uniform_stream

__all__ = [
    "BACKEND",
    "compiled",
    "pure",
    "gillespie_lux",
    "range_pairs",
    "temporal_hops",
    "cover_mask",
    "uniform_stream",
]
