"""Kernel lane selection: compiled extension when available, else pure Python.

Both lanes expose the same module-level functions over an opaque state; set
``SATLAB_KERNEL=py`` (or ``c``) to force a lane. ``impl.LANE`` names the
active one.
"""

import os

from . import pykernel

_forced = os.environ.get("SATLAB_KERNEL", "").strip().lower()

if _forced in {"py", "python", "pure"}:
    impl = pykernel
elif _forced in {"c", "ext", "compiled"}:
    from . import _ckernel as impl  # hard import: fail loudly when forced
else:
    try:
        from . import _ckernel as impl  # type: ignore[no-redef]
    except ImportError:
        impl = pykernel

LANE = impl.LANE


def get_kernel(lane: str):
    """Fetch a specific lane ('py' or 'c'); raises ImportError if unbuilt."""
    if lane == "py":
        return pykernel
    if lane == "c":
        from . import _ckernel
        return _ckernel
    raise ValueError(f"unknown kernel lane {lane!r}")


def available_lanes() -> list[str]:
    lanes = ["py"]
    try:
        from . import _ckernel  # noqa: F401
        lanes.append("c")
    except ImportError:
        pass
    return lanes
