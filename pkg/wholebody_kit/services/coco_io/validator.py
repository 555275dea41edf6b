"""
File validation: collect every violation instead of stopping at the first.
"""

import logging
from pathlib import Path
from typing import Iterable, Optional, Union

from wholebody_kit.models.schemas import ValidationReport, Violation, WHOLEBODY
from wholebody_kit.services.coco_io.parser import (
    Category,
    Problem,
    decode_json,
    scan_detections,
    scan_ground_truth,
)
from wholebody_kit.utils.exceptions import MalformedJson

logger = logging.getLogger(__name__)


def _report(path: Optional[str], problems: Iterable[Problem]) -> ValidationReport:
    errors, warnings = [], []
    for problem in problems:
        violation = Violation(code=problem.code, message=problem.message, location=problem.location)
        (errors if problem.is_error else warnings).append(violation)
    return ValidationReport(path=path, errors=errors, warnings=warnings)


def validate_document(data: Union[bytes, str], path: Optional[str] = None) -> ValidationReport:
    """
    Validate ground-truth JSON without raising on content problems.

    Returns:
        ValidationReport; ``errors`` is empty iff parse_ground_truth accepts the
        data. Out-of-frame keypoints are reported as warnings.
    """
    try:
        raw = decode_json(data)
    except MalformedJson as e:
        return _report(path, [Problem("$", e)])

    report = _report(path, scan_ground_truth(raw))
    logger.info(
        "Validated %s: %d error(s), %d warning(s)", path or "document", len(report.errors), len(report.warnings)
    )
    return report


def validate(path: Union[str, Path]) -> ValidationReport:
    """
    Validate a ground-truth file.

    Raises:
        OSError: the file cannot be read
    """
    return validate_document(Path(path).read_bytes(), str(path))


def validate_detections(path: Union[str, Path], category: Category = WHOLEBODY) -> ValidationReport:
    """Validate a results file for one detection category"""
    data = Path(path).read_bytes()
    try:
        raw = decode_json(data)
    except MalformedJson as e:
        return _report(str(path), [Problem("$", e)])
    return _report(str(path), scan_detections(raw, category))
