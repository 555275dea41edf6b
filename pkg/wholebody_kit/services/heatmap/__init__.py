"""
Heatmap Service
- Gaussian encoding and quarter-offset argmax decoding
- Crop transform into the 256x192 input frame
- Binary stack dumps
"""

from .codec import (
    HeatmapStack,
    encode,
    decode,
    crop_box,
    to_input_frame,
    from_input_frame,
    person_box,
    person_input_pose,
    dump_stack,
    load_stack,
    STACK_MAGIC,
    STACK_VERSION,
)

__all__ = [
    # Codec
    "HeatmapStack",
    "encode",
    "decode",
    # Crop transform
    "crop_box",
    "to_input_frame",
    "from_input_frame",
    "person_box",
    "person_input_pose",
    # Binary dump
    "dump_stack",
    "load_stack",
    "STACK_MAGIC",
    "STACK_VERSION",
]
