"""Hot-kernel backend selection.

Imports the compiled Cython core when available, otherwise the numpy
fallback.  Set ``SINGAUG_FORCE_FALLBACK=1`` to skip the compiled core (used
by the benchmark and the backend-equivalence tests).
"""

import os

from . import fallback

if os.environ.get("SINGAUG_FORCE_FALLBACK"):
    _impl = fallback
    BACKEND = "fallback"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = fallback
        BACKEND = "fallback"

nccf_frames = _impl.nccf_frames
corr_at_lag = _impl.corr_at_lag
pitch_marks = _impl.pitch_marks

__all__ = ["BACKEND", "nccf_frames", "corr_at_lag", "pitch_marks", "fallback"]
