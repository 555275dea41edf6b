"""
Object Keypoint Similarity

    OKS = mean over labeled GT keypoints of exp(-d^2 / (2 * area * (2 * sigma)^2))
"""

from typing import Optional, Sequence, Union

import numpy as np

from wholebody_kit.models.schemas import DetectionRecord, FullBodyPose, PersonAnnotation
from wholebody_kit.services.keypoint_schema import SigmaTable

Pose = Union[FullBodyPose, DetectionRecord, np.ndarray]
Sigmas = Union[SigmaTable, np.ndarray, Sequence[float]]


def sigma_array(sigmas: Optional[Sigmas]) -> np.ndarray:
    if sigmas is None:
        sigmas = SigmaTable.from_config()
    if isinstance(sigmas, SigmaTable):
        return sigmas.as_array()
    return np.asarray(sigmas, dtype=np.float64)


def pose_array(pose: Pose) -> np.ndarray:
    if isinstance(pose, np.ndarray):
        return np.asarray(pose, dtype=np.float64).reshape(-1, 3)
    return pose.as_array()


def fit_length(kps: np.ndarray, k: int) -> np.ndarray:
    """Truncate to k keypoints; missing keypoints are placed infinitely far away"""
    if len(kps) >= k:
        return kps[:k]
    padded = np.full((k, 3), np.inf)
    padded[:, 2] = 0.0
    padded[: len(kps)] = kps
    return padded


def oks_matrix(dets: np.ndarray, gt: np.ndarray, area: float, sigmas: np.ndarray) -> np.ndarray:
    """
    OKS of every detection against one ground-truth pose.

    Args:
        dets: (D, K, 3) detections, already fitted to the GT length K
        gt: (K, 3) ground truth
        area: GT segment area
        sigmas: (K,) falloff constants

    Returns:
        (D,) OKS values; all zero when the GT has no labeled keypoint
    """
    labeled = gt[:, 2] > 0
    if len(dets) == 0:
        return np.zeros(0)
    if not labeled.any():
        return np.zeros(len(dets))

    dx = dets[:, labeled, 0] - gt[labeled, 0]
    dy = dets[:, labeled, 1] - gt[labeled, 1]
    d2 = dx ** 2 + dy ** 2
    if area > 0:
        variances = (2.0 * sigmas[labeled]) ** 2
        similarity = np.exp(-d2 / (2.0 * area * variances))
    else:
        similarity = (d2 == 0).astype(np.float64)
    return similarity.mean(axis=1)


def oks(det: Pose, gt: PersonAnnotation, sigmas: Optional[Sigmas] = None) -> float:
    """
    OKS between one detection and one ground-truth person, in [0, 1].

    The detection is compared on the GT's keypoints only (a 133-keypoint
    detection against a 17-keypoint GT uses the body slots).
    """
    gt_kps = gt.as_array()
    k = len(gt_kps)
    det_kps = fit_length(pose_array(det), k)
    return float(oks_matrix(det_kps[None], gt_kps, gt.area, sigma_array(sigmas)[:k])[0])
