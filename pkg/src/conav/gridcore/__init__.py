"""Grid kernels with a compiled fast path and a pure-Python fallback.

The compiled extension (built from _kernels.pyx) is preferred when it
imported cleanly. Set CONAV_PURE_PYTHON=1 to force the fallback; IMPL
reports which implementation is active ("compiled" or "python").
"""

from __future__ import annotations

import os

if os.environ.get("CONAV_PURE_PYTHON") == "1":
    from conav.gridcore._pykernels import (
        IMPL,
        astar_path,
        bfs_dist,
        los_clear,
        motion_plan,
        motion_reachable,
        safe_landing_mask,
    )
else:
    try:
        from conav.gridcore._kernels import (  # type: ignore[import-not-found]
            IMPL,
            astar_path,
            bfs_dist,
            los_clear,
            motion_plan,
            motion_reachable,
            safe_landing_mask,
        )
    except ImportError:
        from conav.gridcore._pykernels import (
            IMPL,
            astar_path,
            bfs_dist,
            los_clear,
            motion_plan,
            motion_reachable,
            safe_landing_mask,
        )

__all__ = ["IMPL", "astar_path", "bfs_dist", "los_clear",
           "motion_plan", "motion_reachable", "safe_landing_mask"]
