"""
Part Box Proposals from Body Keypoints

Face and hand (and foot) regions are predicted from the 17 annotated body
keypoints so external part detectors can be run on crops. Boxes are square
before clipping; translation and scaling of the keypoints carry over to the
boxes as long as the minimum side floor is not active.
"""

import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from wholebody_kit.models.schemas import (
    AnnotationSet,
    Box,
    ImageRecord,
    PartKind,
    PersonAnnotation,
    PersonProposal,
    ProposalParams,
)
from wholebody_kit.services.keypoint_schema.layout import (
    HEAD_INDICES,
    LEFT_ANKLE,
    LEFT_ELBOW,
    LEFT_KNEE,
    LEFT_WRIST,
    RIGHT_ANKLE,
    RIGHT_ELBOW,
    RIGHT_KNEE,
    RIGHT_WRIST,
)
from wholebody_kit.utils import config
from wholebody_kit.utils.exceptions import PartLengthMismatch

logger = logging.getLogger(__name__)

BodyKeypoints = Union[Sequence[float], np.ndarray]


def body_array(body_kps: BodyKeypoints) -> np.ndarray:
    """(17, 3) array of the body slots; longer whole-body layouts are truncated"""
    array = np.asarray(body_kps, dtype=np.float64).reshape(-1, 3)
    if array.shape[0] < config.NUM_BODY_KEYPOINTS:
        raise PartLengthMismatch(PartKind.BODY, array.shape[0], config.NUM_BODY_KEYPOINTS)
    return array[: config.NUM_BODY_KEYPOINTS]


def face_box(body_kps: BodyKeypoints, params: Optional[ProposalParams] = None) -> Optional[Box]:
    """
    Square face box from nose, eyes and ears.

    Centered at the centroid of the visible head keypoints with side
    face_expansion x (max pairwise distance), never below face_min_side.
    Fewer than two visible head keypoints -> None.
    """
    params = params or ProposalParams()
    kps = body_array(body_kps)
    head = kps[list(HEAD_INDICES)]
    points = head[head[:, 2] > 0, :2]
    if len(points) < 2:
        return None

    cx, cy = points.mean(axis=0)
    diffs = points[:, None, :] - points[None, :, :]
    spread = float(np.sqrt((diffs ** 2).sum(axis=-1)).max())
    side = max(params.face_expansion * spread, params.face_min_side)
    return Box.square(float(cx), float(cy), side)


def _limb_box(kps: np.ndarray, joint: int, parent: int, extension: float,
              scale: float, min_side: float) -> Optional[Box]:
    # center = joint + extension * (joint - parent), side = scale * |joint - parent|
    if kps[joint, 2] <= 0 or kps[parent, 2] <= 0:
        return None
    end = kps[joint, :2]
    limb = end - kps[parent, :2]
    cx, cy = end + extension * limb
    side = max(scale * float(np.hypot(limb[0], limb[1])), min_side)
    return Box.square(float(cx), float(cy), side)


def hand_boxes(body_kps: BodyKeypoints,
               params: Optional[ProposalParams] = None) -> Tuple[Optional[Box], Optional[Box]]:
    """(left, right) hand boxes extrapolated along the forearm from the wrist"""
    params = params or ProposalParams()
    kps = body_array(body_kps)
    left = _limb_box(kps, LEFT_WRIST, LEFT_ELBOW, params.hand_extension, params.hand_scale, params.hand_min_side)
    right = _limb_box(kps, RIGHT_WRIST, RIGHT_ELBOW, params.hand_extension, params.hand_scale, params.hand_min_side)
    return left, right


def foot_box(body_kps: BodyKeypoints, params: Optional[ProposalParams] = None) -> Optional[Box]:
    """Box enclosing the per-side squares extrapolated along the shank from the ankles"""
    params = params or ProposalParams()
    kps = body_array(body_kps)
    sides = [
        _limb_box(kps, ankle, knee, params.foot_extension, params.foot_scale, params.foot_min_side)
        for ankle, knee in ((LEFT_ANKLE, LEFT_KNEE), (RIGHT_ANKLE, RIGHT_KNEE))
    ]
    sides = [box for box in sides if box is not None]
    if not sides:
        return None
    box = sides[0]
    for other in sides[1:]:
        box = box.enclosing(other)
    return box


def clip_to_image(box: Box, image: ImageRecord) -> Box:
    """Clip a box to [0, width] x [0, height]; boxes fully outside collapse onto the nearest border"""
    x1 = min(max(box.x, 0.0), float(image.width))
    y1 = min(max(box.y, 0.0), float(image.height))
    x2 = min(max(box.x2, 0.0), float(image.width))
    y2 = min(max(box.y2, 0.0), float(image.height))
    return Box.from_xyxy(x1, y1, x2, y2)


def person_proposals(person: PersonAnnotation, params: Optional[ProposalParams] = None,
                     image: Optional[ImageRecord] = None) -> PersonProposal:
    """All part proposals of one person, clipped when the image is given"""
    params = params or ProposalParams()
    kps = body_array(person.keypoints)
    left, right = hand_boxes(kps, params)
    boxes = {
        "face_box": face_box(kps, params),
        "left_hand_box": left,
        "right_hand_box": right,
        "foot_box": foot_box(kps, params),
    }
    if image is not None:
        boxes = {name: (clip_to_image(box, image) if box is not None else None) for name, box in boxes.items()}
    return PersonProposal(image_id=person.image_id, person_id=person.id, **boxes)


def propose_dataset(gt: AnnotationSet, params: Optional[ProposalParams] = None) -> List[PersonProposal]:
    """Clipped face / hand / foot proposals for every person of a ground-truth set"""
    images = gt.images_by_id()
    proposals = [person_proposals(person, params, images.get(person.image_id)) for person in gt.annotations]
    logger.info("Built proposals for %d person(s)", len(proposals))
    return proposals
