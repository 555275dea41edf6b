# Whole-Body Toolkit - Services Package
from . import keypoint_schema
from . import coco_io
from . import proposal
from . import merge
from . import heatmap
from . import pose_nms
from . import evaluation
from . import dataset

__all__ = [
    "keypoint_schema",
    "coco_io",
    "proposal",
    "merge",
    "heatmap",
    "pose_nms",
    "evaluation",
    "dataset",
]
