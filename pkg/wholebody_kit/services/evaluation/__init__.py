"""
Evaluation Service
- Object keypoint similarity
- COCO-style greedy matching and AP / AR accumulation
- Whole-body and per-part reports
"""

from .oks import (
    oks,
    oks_matrix,
    sigma_array,
    fit_length,
)

from .protocol import (
    ImageEval,
    ImageMatch,
    keypoint_box_area,
    prepare_image,
    match_prepared,
    match_image,
    accumulate,
    evaluate,
    per_part_report,
)

from .report import (
    FORMATS,
    format_report,
    format_table,
    format_json,
    format_csv,
)

__all__ = [
    # OKS
    "oks",
    "oks_matrix",
    "sigma_array",
    "fit_length",
    # Protocol
    "ImageEval",
    "ImageMatch",
    "keypoint_box_area",
    "prepare_image",
    "match_prepared",
    "match_image",
    "accumulate",
    "evaluate",
    "per_part_report",
    # Reports
    "FORMATS",
    "format_report",
    "format_table",
    "format_json",
    "format_csv",
]
