"""
COCO I/O Service
- Ground-truth and results parsing with designated errors
- Round-trip stable writing
- Violation reports for files
"""

from .parser import (
    parse_ground_truth,
    parse_detections,
    scan_ground_truth,
    scan_detections,
    canonical_order,
    check_detection_refs,
    expected_length,
    load_ground_truth,
    load_detections,
    OUT_OF_FRAME,
)

from .writer import (
    write_annotations,
    write_results,
    annotation_payload,
    results_payload,
)

from .validator import (
    validate,
    validate_document,
    validate_detections,
)

__all__ = [
    # Parsing
    "parse_ground_truth",
    "parse_detections",
    "scan_ground_truth",
    "scan_detections",
    "canonical_order",
    "check_detection_refs",
    "expected_length",
    "load_ground_truth",
    "load_detections",
    "OUT_OF_FRAME",
    # Writing
    "write_annotations",
    "write_results",
    "annotation_payload",
    "results_payload",
    # Validation
    "validate",
    "validate_document",
    "validate_detections",
]
