"""
Merge Service
- Greedy association of part detections to persons
- 133-keypoint pseudo-label construction
"""

from .fusion import (
    MERGED_PARTS,
    merge_person,
    merged_keypoints,
    detection_box,
    assign_parts,
    merge_dataset,
)

__all__ = [
    "MERGED_PARTS",
    "merge_person",
    "merged_keypoints",
    "detection_box",
    "assign_parts",
    "merge_dataset",
]
