"""
Keypoint Schema Service
- 133-keypoint whole-body layout and part ranges
- Skeleton edges
- OKS sigma table and JSON sidecar
"""

from .layout import (
    SkeletonEdge,
    SKELETON_EDGE_COUNT,
    part_range,
    part_of,
    total_keypoints,
    keypoint_names,
    skeleton,
    body_skeleton,
)

from .sigmas import (
    SigmaTable,
    schema_sidecar,
)

__all__ = [
    # Layout
    "SkeletonEdge",
    "SKELETON_EDGE_COUNT",
    "part_range",
    "part_of",
    "total_keypoints",
    "keypoint_names",
    "skeleton",
    "body_skeleton",
    # Sigmas
    "SigmaTable",
    "schema_sidecar",
]
