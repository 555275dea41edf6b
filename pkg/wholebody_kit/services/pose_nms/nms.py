"""
Parametric Pose NMS

Redundant pose estimates of the same person are removed greedily: the best
remaining pose is kept and every pose too similar to it is deleted.

Similarity of poses p and q over their jointly labeled keypoints J, with
c = confidence clipped to [0, 1], d the keypoint distance and s the mean of
the two pose scales (sqrt of the labeled-keypoint box area):

    K_sim = mean_J  c_p * c_q * exp(-d^2 / (2 (sigma_soft * s)^2))
    H_sim = mean_J  exp(-d / (sigma_soft * s))
    D     = K_sim + lambda * H_sim

D is 0 when J is empty. When s is 0 both kernels reduce to exact equality.
A pose is suppressed when D exceeds eta.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np

from wholebody_kit.models.schemas import DetectionRecord, DetectionSet, FullBodyPose, NmsParams

logger = logging.getLogger(__name__)


def pose_scale(kps: np.ndarray) -> float:
    """Square root of the area of the box around the labeled keypoints"""
    labeled = kps[kps[:, 2] > 0, :2]
    if len(labeled) == 0:
        return 0.0
    extent = labeled.max(axis=0) - labeled.min(axis=0)
    return float(np.sqrt(extent[0] * extent[1]))


def _distance(p: np.ndarray, q: np.ndarray, scale_p: float, scale_q: float, params: NmsParams) -> float:
    k = min(len(p), len(q))
    p, q = p[:k], q[:k]
    joint = (p[:, 2] > 0) & (q[:, 2] > 0)
    if not joint.any():
        return 0.0

    cp = np.clip(p[joint, 2], 0.0, 1.0)
    cq = np.clip(q[joint, 2], 0.0, 1.0)
    d = np.hypot(p[joint, 0] - q[joint, 0], p[joint, 1] - q[joint, 1])

    width = params.sigma_soft * (scale_p + scale_q) / 2.0
    if width > 0:
        soft = np.exp(-(d ** 2) / (2.0 * width ** 2))
        spatial = np.exp(-d / width)
    else:
        soft = spatial = (d == 0).astype(np.float64)

    k_sim = float(np.mean(cp * cq * soft))
    h_sim = float(np.mean(spatial))
    return k_sim + params.lambda_ * h_sim


def pose_distance(p: FullBodyPose, q: FullBodyPose, params: Optional[NmsParams] = None) -> float:
    """
    Similarity-style pose distance D >= 0; larger means more alike.

    Symmetric in (p, q) and invariant to translating both poses together.
    """
    params = params or NmsParams()
    a, b = p.as_array(), q.as_array()
    return _distance(a, b, pose_scale(a), pose_scale(b), params)


def suppress(keypoints: Sequence[np.ndarray], scores: Sequence[float], params: NmsParams) -> List[int]:
    """
    Greedy suppression over (K, 3) arrays.

    Returns:
        Indices of kept poses, by descending score (ties by input index)
    """
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    scales = [pose_scale(kps) for kps in keypoints]

    kept: List[int] = []
    while order:
        best = order.pop(0)
        kept.append(best)
        order = [
            i for i in order
            if _distance(keypoints[best], keypoints[i], scales[best], scales[i], params) <= params.eta
        ]
    return kept


def run_nms(poses: Sequence[FullBodyPose], params: Optional[NmsParams] = None) -> List[FullBodyPose]:
    """
    Eliminate redundant poses of one image.

    Poses are visited by descending score, each kept pose deleting all
    remaining poses whose distance to it exceeds eta. No score floor applies
    here, so the top-scoring pose always survives.

    Returns:
        Kept poses sorted by descending score
    """
    params = params or NmsParams()
    kept = suppress([pose.as_array() for pose in poses], [pose.score for pose in poses], params)
    return [poses[i] for i in kept]


def _nms_image(records: List[DetectionRecord], params: NmsParams) -> List[DetectionRecord]:
    records = [record for record in records if record.score >= params.score_floor]
    kept = suppress([record.as_array() for record in records], [record.score for record in records], params)
    return [records[i] for i in kept]


def nms_results(detections: DetectionSet, params: Optional[NmsParams] = None, workers: int = 1) -> DetectionSet:
    """Drop records below score_floor, then run NMS independently on every image"""
    params = params or NmsParams()
    grouped: Dict[int, List[DetectionRecord]] = detections.by_image()
    image_ids = sorted(grouped)

    if workers > 1 and len(image_ids) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_image = list(pool.map(lambda image_id: _nms_image(grouped[image_id], params), image_ids))
    else:
        per_image = [_nms_image(grouped[image_id], params) for image_id in image_ids]

    records = [record for kept in per_image for record in kept]
    logger.info("Pose NMS kept %d of %d detection(s) over %d image(s)", len(records), len(detections), len(image_ids))
    return detections.model_copy(update={"records": records})
