"""
Proposal Service
- Face, hand and foot boxes predicted from body keypoints
- Image clipping
"""

from .boxes import (
    body_array,
    face_box,
    hand_boxes,
    foot_box,
    clip_to_image,
    person_proposals,
    propose_dataset,
)

__all__ = [
    "body_array",
    "face_box",
    "hand_boxes",
    "foot_box",
    "clip_to_image",
    "person_proposals",
    "propose_dataset",
]
