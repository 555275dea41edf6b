"""
COCO Keypoint File Writing
"""

import json
from typing import Any, Dict, List

from wholebody_kit.models.schemas import AnnotationSet, DetectionSet


def annotation_payload(annotations: AnnotationSet) -> Dict[str, Any]:
    """JSON-ready dict of an AnnotationSet with num_keypoints recomputed"""
    payload = annotations.model_dump(mode="json")
    for ann in payload["annotations"]:
        ann["num_keypoints"] = sum(1 for v in ann["keypoints"][2::3] if v > 0)
    return payload


def write_annotations(annotations: AnnotationSet) -> bytes:
    """
    Serialize an AnnotationSet to COCO ground-truth JSON (UTF-8 bytes).
    Unknown fields carried by the parsed records are written back unchanged.
    """
    return json.dumps(annotation_payload(annotations), ensure_ascii=False).encode("utf-8")


def results_payload(detections: DetectionSet) -> List[Dict[str, Any]]:
    return [
        record.model_dump(mode="json", exclude={"category"}, exclude_none=True)
        for record in detections.records
    ]


def write_results(detections: DetectionSet) -> bytes:
    """Serialize detections to a COCO results array (UTF-8 bytes)"""
    return json.dumps(results_payload(detections), ensure_ascii=False).encode("utf-8")
