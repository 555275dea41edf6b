"""
Synthetic annotation builders for tests and demos.

A standing person template (17 COCO body keypoints, 60 x 215 px) is placed
at an offset; part detections are laid out deterministically inside a box.
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from wholebody_kit.models.schemas import Box, PartKind
from wholebody_kit.services.keypoint_schema import part_range, total_keypoints

# (x, y) of the 17 body keypoints relative to the person offset
BODY_TEMPLATE: Tuple[Tuple[int, int], ...] = (
    (50, 20), (55, 15), (45, 15), (60, 20), (40, 20),
    (70, 50), (30, 50), (80, 90), (20, 90), (80, 130), (20, 130),
    (62, 130), (38, 130), (62, 180), (38, 180), (62, 230), (38, 230),
)
TEMPLATE_BBOX = (20, 15, 60, 215)


def body_keypoints(ox: float, oy: float, v: int = 2) -> List[float]:
    keypoints: List[float] = []
    for x, y in BODY_TEMPLATE:
        keypoints.extend((ox + x, oy + y, v))
    return keypoints


def person(person_id: int, image_id: int, ox: float, oy: float,
           keypoints: Optional[Sequence[float]] = None) -> Dict[str, Any]:
    """COCO annotation dict of the template person at (ox, oy)"""
    keypoints = list(keypoints) if keypoints is not None else body_keypoints(ox, oy)
    bx, by, bw, bh = TEMPLATE_BBOX
    return {
        "id": person_id,
        "image_id": image_id,
        "category_id": 1,
        "keypoints": keypoints,
        "num_keypoints": sum(1 for v in keypoints[2::3] if v > 0),
        "bbox": [ox + bx, oy + by, bw, bh],
        "area": float(bw * bh),
        "iscrowd": 0,
    }


def body_ground_truth() -> Dict[str, Any]:
    """Two images, three persons; identical to fixtures/body_gt.json without the info block"""
    return {
        "images": [
            {"id": 1, "width": 640, "height": 480, "file_name": "000001.jpg"},
            {"id": 2, "width": 320, "height": 240, "file_name": "000002.jpg"},
        ],
        "annotations": [
            person(1, 1, 100, 100),
            person(2, 1, 400, 120),
            person(3, 2, 10, 0),
        ],
        "categories": [{"id": 1, "name": "person"}],
    }


def part_keypoints(kind: PartKind, box: Box, confidence: float = 0.9) -> List[float]:
    """Keypoints of a part spread over a box (each inside it) with a fixed confidence"""
    n = len(part_range(kind))
    keypoints: List[float] = []
    for i in range(n):
        fx = (i + 0.5) / n
        fy = ((i * 5) % n + 0.5) / n
        keypoints.extend((box.x + fx * box.w, box.y + fy * box.h, confidence))
    return keypoints


def part_detection(kind: PartKind, box: Box, image_id: int, score: float = 0.9,
                   det_id: Optional[int] = None, confidence: float = 0.9,
                   with_bbox: bool = True) -> Dict[str, Any]:
    """COCO results record of a part detector for the given box"""
    record: Dict[str, Any] = {
        "image_id": image_id,
        "category_id": 1,
        "keypoints": part_keypoints(kind, box, confidence),
        "score": score,
    }
    if det_id is not None:
        record["id"] = det_id
    if with_bbox:
        record["bbox"] = box.to_list()
    return record


def wholebody_keypoints(ox: float, oy: float, rng: np.random.Generator, scale: float = 1.0,
                        v: int = 2) -> List[float]:
    """
    133 labeled keypoints: the body template plus parts scattered around it,
    all scaled by ``scale`` about the origin.
    """
    kps = np.zeros((total_keypoints(), 3))
    kps[:17, :2] = np.asarray(BODY_TEMPLATE, dtype=np.float64)
    kps[17:, 0] = rng.uniform(20, 80, size=total_keypoints() - 17)
    kps[17:, 1] = rng.uniform(15, 230, size=total_keypoints() - 17)
    kps[:, 0] = (kps[:, 0] + ox) * scale
    kps[:, 1] = (kps[:, 1] + oy) * scale
    kps[:, 2] = v
    return [float(value) for value in kps.reshape(-1)]


def random_evaluation_instance(rng: np.random.Generator, max_images: int = 4, max_persons: int = 4,
                               max_dets: int = 6, num_keypoints: int = 17
                               ) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    """
    Random ground truth and results with mixed person areas, unlabeled
    persons, near-duplicate and spurious detections.

    Returns:
        (ground-truth dict, results list)
    """
    images, annotations, results = [], [], []
    next_person, next_det = 1, 1
    for image_id in range(1, int(rng.integers(1, max_images + 1)) + 1):
        images.append({"id": image_id, "width": 1000, "height": 1000})
        persons = []
        for _ in range(int(rng.integers(0, max_persons + 1))):
            cx, cy = rng.uniform(200, 800, size=2)
            half = rng.uniform(8, 120)
            kps = np.zeros((num_keypoints, 3))
            kps[:, 0] = cx + rng.uniform(-half, half, size=num_keypoints)
            kps[:, 1] = cy + rng.uniform(-half, half, size=num_keypoints)
            kps[:, 2] = np.where(rng.random(num_keypoints) < 0.8, 2, 0)
            if rng.random() < 0.1:
                kps[:, 2] = 0
            kps[kps[:, 2] == 0, :2] = 0
            area = float((2 * half) ** 2 * rng.uniform(0.5, 1.0))
            persons.append(kps)
            annotations.append({
                "id": next_person,
                "image_id": image_id,
                "category_id": 1,
                "keypoints": [float(value) for value in kps.reshape(-1)],
                "num_keypoints": int(np.count_nonzero(kps[:, 2] > 0)),
                "area": area,
                "iscrowd": 0,
            })
            next_person += 1

        for _ in range(int(rng.integers(0, max_dets + 1))):
            if persons and rng.random() < 0.75:
                base = persons[int(rng.integers(0, len(persons)))]
                spread = np.ptp(base[:, :2][base[:, 2] > 0], axis=0).max() if (base[:, 2] > 0).any() else 10.0
                det = np.zeros((num_keypoints, 3))
                det[:, :2] = base[:, :2] + rng.normal(0, rng.uniform(0.01, 0.3) * spread + 1e-3,
                                                      size=(num_keypoints, 2))
            else:
                det = np.zeros((num_keypoints, 3))
                det[:, :2] = rng.uniform(100, 900, size=(num_keypoints, 2))
            det[:, 2] = rng.uniform(0.05, 1.0, size=num_keypoints)
            results.append({
                "id": next_det,
                "image_id": image_id,
                "category_id": 1,
                "keypoints": [float(value) for value in det.reshape(-1)],
                "score": float(rng.uniform(0.01, 1.0)),
            })
            next_det += 1

    gt = {"images": images, "annotations": annotations, "categories": [{"id": 1, "name": "person"}]}
    return gt, results
