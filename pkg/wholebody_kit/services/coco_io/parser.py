"""
COCO Keypoint File Parsing

Parses ground-truth annotation files (images / annotations / categories) and
detector result files (flat arrays of {image_id, keypoints, score}). Both
parsers share the problem scanners used by the validator, so a file parses
cleanly exactly when the validator reports no errors.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Set, Union

from pydantic import ValidationError

from wholebody_kit.models.schemas import (
    AnnotationSet,
    DetectionRecord,
    DetectionSet,
    PartKind,
    WHOLEBODY,
)
from wholebody_kit.services.keypoint_schema import part_range, total_keypoints
from wholebody_kit.utils import config
from wholebody_kit.utils.exceptions import (
    BadScore,
    BadVisibility,
    DanglingImageRef,
    MalformedJson,
    SchemaViolation,
    WholebodyError,
    WrongKeypointCount,
)

logger = logging.getLogger(__name__)

Category = Union[PartKind, str]

OUT_OF_FRAME = "OUT_OF_FRAME"


class Problem:
    """One finding of a scanner: an error (carrying its exception) or a warning"""

    __slots__ = ("error", "code", "message", "location")

    def __init__(self, location: str, error: Optional[WholebodyError] = None,
                 code: str = "", message: str = ""):
        self.error = error
        self.location = location
        self.code = error.error_code if error is not None else code
        self.message = error.message if error is not None else message

    @property
    def is_error(self) -> bool:
        return self.error is not None


# ============================================================================
# Decoding
# ============================================================================

def decode_json(data: Union[bytes, str]) -> Any:
    """Decode UTF-8 JSON bytes, raising MalformedJson on any decoding failure"""
    try:
        text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
        return json.loads(text)
    except UnicodeDecodeError as e:
        raise MalformedJson(f"input is not valid UTF-8: {e}") from e
    except json.JSONDecodeError as e:
        raise MalformedJson(f"input is not valid JSON: {e}") from e


def expected_length(category: Category) -> int:
    """Flat keypoint array length for a detection category"""
    if category == WHOLEBODY:
        return 3 * total_keypoints()
    return 3 * len(part_range(PartKind(category)))


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_finite(value: Any) -> bool:
    return _is_number(value) and math.isfinite(value)


# ============================================================================
# Ground Truth
# ============================================================================

def scan_ground_truth(raw: Any) -> Iterator[Problem]:
    """Yield every problem in a decoded ground-truth document, in file order"""
    if not isinstance(raw, dict):
        yield Problem("$", SchemaViolation("ground truth must be a JSON object"))
        return

    for key in ("images", "annotations"):
        if not isinstance(raw.get(key), list):
            yield Problem(f"$.{key}", SchemaViolation(f"'{key}' must be an array"))
            return
    if "categories" in raw and not isinstance(raw["categories"], list):
        yield Problem("$.categories", SchemaViolation("'categories' must be an array"))
    else:
        for c, category in enumerate(raw.get("categories", [])):
            if not isinstance(category, dict) or not isinstance(category.get("id"), int):
                yield Problem(f"$.categories[{c}]", SchemaViolation(f"category {c} needs an integer 'id'"))

    images: Dict[Any, Dict[str, Any]] = {}
    for i, image in enumerate(raw["images"]):
        where = f"$.images[{i}]"
        if not isinstance(image, dict) or not isinstance(image.get("id"), int):
            yield Problem(where, SchemaViolation(f"{where} needs an integer 'id'"))
            continue
        if image["id"] in images:
            yield Problem(where, SchemaViolation(f"duplicate image id {image['id']}"))
        for dim in ("width", "height"):
            value = image.get(dim)
            if not _is_number(value) or value <= 0 or not float(value).is_integer():
                yield Problem(f"{where}.{dim}", SchemaViolation(f"image {image['id']} has invalid {dim} {value!r}"))
        images[image["id"]] = image

    allowed = [3 * k for k in config.ALLOWED_GT_KEYPOINT_COUNTS]
    annotation_ids: Set[int] = set()
    for j, ann in enumerate(raw["annotations"]):
        where = f"$.annotations[{j}]"
        if not isinstance(ann, dict):
            yield Problem(where, SchemaViolation(f"{where} must be an object"))
            continue
        missing = [key for key in ("id", "image_id", "keypoints") if key not in ann]
        if missing:
            yield Problem(where, SchemaViolation(f"{where} is missing {missing}"))
            continue
        if not isinstance(ann["id"], int) or not isinstance(ann["image_id"], int):
            yield Problem(where, SchemaViolation(f"{where} needs integer 'id' and 'image_id'"))
            continue
        if ann["id"] in annotation_ids:
            yield Problem(f"{where}.id", SchemaViolation(f"duplicate annotation id {ann['id']}"))
        annotation_ids.add(ann["id"])

        keypoints = ann["keypoints"]
        if not isinstance(keypoints, list) or not all(_is_finite(v) for v in keypoints):
            yield Problem(f"{where}.keypoints", SchemaViolation(f"{where}.keypoints must be an array of finite numbers"))
            continue
        if len(keypoints) not in allowed:
            yield Problem(f"{where}.keypoints", WrongKeypointCount(len(keypoints), allowed, where))
            continue

        bad = next((v for v in keypoints[2::3] if v not in (0, 1, 2)), None)
        if bad is not None:
            yield Problem(f"{where}.keypoints", BadVisibility(bad, where))
            continue

        labeled = sum(1 for v in keypoints[2::3] if v > 0)
        if "num_keypoints" in ann and ann["num_keypoints"] != labeled:
            yield Problem(
                f"{where}.num_keypoints",
                SchemaViolation(f"num_keypoints {ann['num_keypoints']!r} but {labeled} labeled keypoints"),
            )
        area = ann.get("area", 0)
        if not _is_finite(area) or (labeled > 0 and area <= 0):
            yield Problem(f"{where}.area", SchemaViolation(f"{where}.area {area!r} must be finite and positive when keypoints are labeled"))
        bbox = ann.get("bbox")
        if bbox is not None and not (
            isinstance(bbox, list) and len(bbox) == 4
            and all(_is_finite(v) for v in bbox) and bbox[2] >= 0 and bbox[3] >= 0
        ):
            yield Problem(f"{where}.bbox", SchemaViolation(f"{where}.bbox must be [x, y, w, h] with w, h >= 0"))

        image = images.get(ann["image_id"])
        if image is None:
            yield Problem(f"{where}.image_id", DanglingImageRef(ann["image_id"]))
            continue

        width, height = image.get("width"), image.get("height")
        if not (_is_number(width) and _is_number(height)):
            continue
        for k in range(len(keypoints) // 3):
            x, y, v = keypoints[3 * k: 3 * k + 3]
            if v > 0 and (x < 0 or y < 0 or x > width or y > height):
                yield Problem(
                    f"{where}.keypoints[{k}]",
                    code=OUT_OF_FRAME,
                    message=f"keypoint {k} of annotation {ann['id']} at ({x}, {y}) is outside the "
                            f"{width}x{height} image",
                )


def parse_ground_truth(data: Union[bytes, str]) -> AnnotationSet:
    """
    Parse a COCO keypoint ground-truth file.

    Args:
        data: UTF-8 JSON bytes

    Returns:
        AnnotationSet whose persons all satisfy the annotation invariants

    Raises:
        MalformedJson, SchemaViolation, WrongKeypointCount, BadVisibility,
        DanglingImageRef
    """
    raw = decode_json(data)
    warnings = 0
    for problem in scan_ground_truth(raw):
        if problem.is_error:
            raise problem.error
        warnings += 1
    if warnings:
        logger.warning("Ground truth has %d out-of-frame keypoint(s)", warnings)

    raw = dict(raw)
    raw["annotations"] = [_with_num_keypoints(ann) for ann in raw["annotations"]]
    try:
        annotation_set = AnnotationSet.model_validate(raw)
    except ValidationError as e:
        raise SchemaViolation(f"ground truth does not match the COCO schema: {e}") from e

    logger.info(
        "Parsed ground truth: %d images, %d persons", len(annotation_set.images), len(annotation_set)
    )
    return annotation_set


def _with_num_keypoints(ann: Dict[str, Any]) -> Dict[str, Any]:
    if "num_keypoints" in ann:
        return ann
    ann = dict(ann)
    ann["num_keypoints"] = sum(1 for v in ann["keypoints"][2::3] if v > 0)
    return ann


# ============================================================================
# Detections
# ============================================================================

def scan_detections(raw: Any, category: Category = WHOLEBODY) -> Iterator[Problem]:
    """Yield every problem in a decoded results array"""
    if not isinstance(raw, list):
        yield Problem("$", SchemaViolation("results must be a JSON array"))
        return

    length = expected_length(category)
    for i, record in enumerate(raw):
        where = f"$[{i}]"
        if not isinstance(record, dict):
            yield Problem(where, SchemaViolation(f"{where} must be an object"))
            continue
        missing = [key for key in ("image_id", "keypoints", "score") if key not in record]
        if missing:
            yield Problem(where, SchemaViolation(f"{where} is missing {missing}"))
            continue

        keypoints = record["keypoints"]
        if not isinstance(keypoints, list) or not all(
            _is_number(v) and math.isfinite(v) for v in keypoints
        ):
            yield Problem(f"{where}.keypoints", SchemaViolation(f"{where}.keypoints must be finite numbers"))
            continue
        if len(keypoints) != length:
            yield Problem(f"{where}.keypoints", WrongKeypointCount(len(keypoints), [length], where))
            continue

        score = record["score"]
        if not _is_number(score) or not math.isfinite(score) or not 0.0 <= score <= 1.0:
            yield Problem(f"{where}.score", BadScore(score, where))


def parse_detections(data: Union[bytes, str], category: Category = WHOLEBODY) -> DetectionSet:
    """
    Parse a COCO results file for one category (a PartKind or whole-body).

    Records come back sorted by (image_id, descending score); records without
    an ``id`` get one after the canonical sort so ids never depend on file order.

    Raises:
        MalformedJson, SchemaViolation, WrongKeypointCount, BadScore
    """
    if category != WHOLEBODY:
        category = PartKind(category)
    raw = decode_json(data)
    for problem in scan_detections(raw, category):
        if problem.is_error:
            raise problem.error

    try:
        records = [DetectionRecord.model_validate({**record, "category": category}) for record in raw]
    except ValidationError as e:
        raise SchemaViolation(f"results do not match the COCO results schema: {e}") from e

    records = canonical_order(records)
    logger.info("Parsed %d %s detection(s)", len(records), getattr(category, "value", category))
    return DetectionSet(category=category, records=records)


def canonical_order(records: List[DetectionRecord]) -> List[DetectionRecord]:
    """Sort by (image_id, -score, id, keypoints) and fill in missing ids"""
    records = sorted(
        records,
        key=lambda r: (
            r.image_id,
            -r.score,
            r.id if r.id is not None else math.inf,
            tuple(r.keypoints),
        ),
    )
    next_id = max((r.id for r in records if r.id is not None), default=0) + 1
    ordered = []
    for record in records:
        if record.id is None:
            record = record.model_copy(update={"id": next_id})
            next_id += 1
        ordered.append(record)
    return ordered


def check_detection_refs(detections: DetectionSet, gt: AnnotationSet) -> None:
    """Raise DanglingImageRef when a detection names an image the GT lacks"""
    known = {image.id for image in gt.images}
    for record in detections.records:
        if record.image_id not in known:
            raise DanglingImageRef(record.image_id)


# ============================================================================
# Path Helpers
# ============================================================================

def load_ground_truth(path: Union[str, Path]) -> AnnotationSet:
    return parse_ground_truth(Path(path).read_bytes())


def load_detections(path: Union[str, Path], category: Category = WHOLEBODY) -> DetectionSet:
    return parse_detections(Path(path).read_bytes(), category)
