"""
Pose NMS Service
- Two-term parametric pose distance
- Greedy suppression per image
"""

from .nms import (
    pose_scale,
    pose_distance,
    suppress,
    run_nms,
    nms_results,
)

__all__ = [
    "pose_scale",
    "pose_distance",
    "suppress",
    "run_nms",
    "nms_results",
]
