"""
Whole-Body Pseudo-Label Construction

Body ground truth is extended to the 133-keypoint layout by attaching foot,
face and hand detections. Each part detection is associated with the person
whose proposal box it overlaps most (greedy, score-descending), and its
keypoints are appended in layout order with visibility 1. Body slots are
never modified.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

from wholebody_kit.models.schemas import (
    AnnotationSet,
    Box,
    DetectionRecord,
    DetectionSet,
    FullBodyPose,
    MergeParams,
    Number,
    PartKind,
    PersonAnnotation,
    PersonProposal,
)
from wholebody_kit.services.keypoint_schema import part_range
from wholebody_kit.services.proposal import person_proposals
from wholebody_kit.utils import config
from wholebody_kit.utils.exceptions import PartLengthMismatch, SchemaViolation

logger = logging.getLogger(__name__)

# Parts in the order they follow the body slots
MERGED_PARTS = (PartKind.FOOT, PartKind.FACE, PartKind.LEFT_HAND, PartKind.RIGHT_HAND)

_PROPOSAL_FIELD = {
    PartKind.FOOT: "foot_box",
    PartKind.FACE: "face_box",
    PartKind.LEFT_HAND: "left_hand_box",
    PartKind.RIGHT_HAND: "right_hand_box",
}

Detections = Union[DetectionSet, Sequence[DetectionRecord]]


# ============================================================================
# Single Person
# ============================================================================

def _part_triples(record: Optional[DetectionRecord], kind: PartKind,
                  confidence_threshold: float) -> List[Number]:
    size = len(part_range(kind))
    if record is None:
        return [0, 0, 0] * size

    if len(record.keypoints) != 3 * size:
        raise PartLengthMismatch(kind, len(record.keypoints) // 3, size)

    triples: List[Number] = []
    for x, y, c in record.as_array():
        if c < confidence_threshold:
            triples.extend((0, 0, 0))
        else:
            triples.extend((float(x), float(y), 1))
    return triples


def merged_keypoints(body_gt: PersonAnnotation, parts: Mapping[PartKind, Optional[DetectionRecord]],
                     confidence_threshold: float = config.MERGE_CONFIDENCE_THRESHOLD) -> List[Number]:
    """Flat 399-value keypoint list: GT body slots verbatim, then foot, face and hands"""
    body_length = 3 * config.NUM_BODY_KEYPOINTS
    if len(body_gt.keypoints) < body_length:
        raise PartLengthMismatch(PartKind.BODY, len(body_gt.keypoints) // 3, config.NUM_BODY_KEYPOINTS)

    keypoints: List[Number] = list(body_gt.keypoints[:body_length])
    for kind in MERGED_PARTS:
        keypoints.extend(_part_triples(parts.get(kind), kind, confidence_threshold))
    return keypoints


def merge_person(
    body_gt: PersonAnnotation,
    foot: Optional[DetectionRecord] = None,
    face: Optional[DetectionRecord] = None,
    lhand: Optional[DetectionRecord] = None,
    rhand: Optional[DetectionRecord] = None,
    confidence_threshold: float = config.MERGE_CONFIDENCE_THRESHOLD,
) -> FullBodyPose:
    """
    Fuse one person's body annotation with their part detections.

    Absent parts fill their slot range with (0, 0, 0). Detector keypoints
    whose confidence is below the threshold are zeroed as well; the others
    carry visibility 1.

    Raises:
        PartLengthMismatch: a part record does not have its category's length
    """
    parts = {
        PartKind.FOOT: foot,
        PartKind.FACE: face,
        PartKind.LEFT_HAND: lhand,
        PartKind.RIGHT_HAND: rhand,
    }
    keypoints = merged_keypoints(body_gt, parts, confidence_threshold)
    return FullBodyPose(keypoints=keypoints, score=1.0, person_id=body_gt.id, image_id=body_gt.image_id)


# ============================================================================
# Association
# ============================================================================

def detection_box(record: DetectionRecord,
                  confidence_threshold: float = config.MERGE_CONFIDENCE_THRESHOLD) -> Optional[Box]:
    """The record's own bbox, else the tight box of its confident keypoints"""
    if record.bbox is not None:
        return record.bbox
    kps = record.as_array()
    confident = kps[kps[:, 2] >= confidence_threshold, :2]
    if len(confident) == 0:
        return None
    x1, y1 = confident.min(axis=0)
    x2, y2 = confident.max(axis=0)
    return Box.from_xyxy(float(x1), float(y1), float(x2), float(y2))


def assign_parts(
    persons: Sequence[PersonAnnotation],
    detections: Detections,
    kind: PartKind,
    iou_threshold: float = config.MERGE_IOU_THRESHOLD,
    params: Optional[MergeParams] = None,
    proposals: Optional[Mapping[int, PersonProposal]] = None,
) -> Dict[int, DetectionRecord]:
    """
    Greedy association of part detections to persons of one image.

    Detections are visited by descending score (ties by id); each takes the
    still-free person whose proposal box has the highest IoU with the
    detection's box, provided it reaches iou_threshold.

    Args:
        proposals: person id -> proposals; built from the body keypoints when omitted

    Returns:
        person id -> assigned detection
    """
    params = params or MergeParams()
    records = detections.records if isinstance(detections, DetectionSet) else list(detections)
    if proposals is None:
        proposals = {person.id: person_proposals(person, params.proposal) for person in persons}

    field = _PROPOSAL_FIELD[kind]
    person_boxes = [
        (person.id, getattr(proposals[person.id], field))
        for person in sorted(persons, key=lambda p: p.id)
        if person.id in proposals and getattr(proposals[person.id], field) is not None
    ]

    assigned: Dict[int, DetectionRecord] = {}
    ordered = sorted(records, key=lambda r: (-r.score, r.id if r.id is not None else np.inf))
    for record in ordered:
        box = detection_box(record, params.confidence_threshold)
        if box is None:
            continue
        best_id, best_iou = None, 0.0
        for person_id, proposal_box in person_boxes:
            if person_id in assigned:
                continue
            iou = box.iou(proposal_box)
            if iou > best_iou:
                best_id, best_iou = person_id, iou
        if best_id is not None and best_iou >= iou_threshold:
            assigned[best_id] = record
    return assigned


# ============================================================================
# Dataset
# ============================================================================

def _merge_image(image_id: int, persons: List[PersonAnnotation], part_sets: Mapping[PartKind, Detections],
                 params: MergeParams, images: Mapping) -> Dict[int, PersonAnnotation]:
    image = images.get(image_id)
    proposals = {person.id: person_proposals(person, params.proposal, image) for person in persons}

    assignments: Dict[PartKind, Dict[int, DetectionRecord]] = {}
    for kind, records in part_sets.items():
        assignments[kind] = assign_parts(
            persons, records, kind, params.iou_threshold, params=params, proposals=proposals
        )

    merged = {}
    for person in persons:
        parts = {kind: assignments.get(kind, {}).get(person.id) for kind in MERGED_PARTS}
        keypoints = merged_keypoints(person, parts, params.confidence_threshold)
        labeled = sum(1 for v in keypoints[2::3] if v > 0)
        merged[person.id] = person.model_copy(update={"keypoints": keypoints, "num_keypoints": labeled})
    return merged


def _group_by_image(detections: Optional[DetectionSet], known: Iterable[int],
                    kind: PartKind) -> Dict[int, List[DetectionRecord]]:
    if detections is None:
        return {}
    known = set(known)
    grouped = detections.by_image()
    stray = sorted(image_id for image_id in grouped if image_id not in known)
    if stray:
        logger.warning("Skipping %s detections for %d unknown image(s): %s", kind.value, len(stray), stray[:10])
    return {image_id: records for image_id, records in grouped.items() if image_id in known}


def _has_part(annotation: PersonAnnotation, kind: PartKind) -> bool:
    slots = part_range(kind)
    return any(v > 0 for v in annotation.keypoints[3 * slots.start + 2: 3 * slots.stop: 3])


def merge_dataset(
    gt: AnnotationSet,
    foot: Optional[DetectionSet] = None,
    face: Optional[DetectionSet] = None,
    lhand: Optional[DetectionSet] = None,
    rhand: Optional[DetectionSet] = None,
    params: Optional[MergeParams] = None,
    workers: int = 1,
) -> AnnotationSet:
    """
    Build 133-keypoint annotations for every person of a body ground truth.

    Images are merged independently (optionally on a thread pool) and the
    result keeps the input annotation order, ids and extra fields.

    Args:
        gt: Body (or whole-body) ground truth; only the body slots are read
        foot, face, lhand, rhand: Part detection sets, each optional
        params: Association and thresholding parameters
        workers: Number of threads for per-image work

    Returns:
        AnnotationSet whose keypoint arrays all have length 399

    Raises:
        SchemaViolation: two persons share an annotation id
    """
    params = params or MergeParams()
    ids = [person.id for person in gt.annotations]
    if len(set(ids)) != len(ids):
        raise SchemaViolation("annotation ids must be unique to merge")
    persons_by_image = gt.persons_by_image()
    images = gt.images_by_id()
    known = images.keys()

    grouped = {
        kind: _group_by_image(detections, known, kind)
        for kind, detections in zip(MERGED_PARTS, (foot, face, lhand, rhand))
    }

    def work(image_id: int) -> Dict[int, PersonAnnotation]:
        part_sets = {kind: grouped[kind].get(image_id, []) for kind in MERGED_PARTS}
        return _merge_image(image_id, persons_by_image[image_id], part_sets, params, images)

    image_ids = sorted(persons_by_image)
    merged: Dict[int, PersonAnnotation] = {}
    if workers > 1 and len(image_ids) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(work, image_ids):
                merged.update(result)
    else:
        for image_id in image_ids:
            merged.update(work(image_id))

    annotations = [merged[person.id] for person in gt.annotations]
    attached = {kind.value: sum(1 for a in annotations if _has_part(a, kind)) for kind in MERGED_PARTS}
    logger.info("Merged %d person(s) across %d image(s); parts attached: %s", len(annotations), len(image_ids), attached)
    return gt.model_copy(update={"annotations": annotations})
