"""Hot-loop kernels with backend selection at import time.

The compiled Cython core is preferred; the pure-Python module implements the
same per-step arithmetic (identical operation order, hence bit-identical
float results) and is selected automatically when the extension is missing.
Set GATEDCUSUM_KERNEL=python or =compiled to force a backend; `force()` swaps
it at runtime (used by the parity tests and the benchmark).
"""

from __future__ import annotations

import os
from contextlib import contextmanager

from . import fallback

_compiled = None
try:
    from . import _core as _compiled  # type: ignore[no-redef]
except ImportError:
    _compiled = None

_forced = os.environ.get("GATEDCUSUM_KERNEL", "").strip().lower()
if _forced == "python":
    impl = fallback
elif _forced == "compiled":
    if _compiled is None:
        raise ImportError("GATEDCUSUM_KERNEL=compiled but the extension is not built")
    impl = _compiled
else:
    impl = _compiled if _compiled is not None else fallback

BACKEND = "compiled" if impl is _compiled and _compiled is not None else "python"


def available_backends() -> dict[str, object]:
    out: dict[str, object] = {"python": fallback}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out


def force(name: str) -> None:
    """Swap the active backend ('python' or 'compiled')."""
    global impl, BACKEND
    impl = available_backends()[name]
    BACKEND = name


@contextmanager
def forced(name: str):
    prev = BACKEND
    force(name)
    try:
        yield impl
    finally:
        force(prev)
