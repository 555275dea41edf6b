"""
OKS AP / AR Evaluation Protocol

COCO keypoint protocol over whole-body (or per-part) keypoints:
  - per image, detections sorted by (-score, id) and capped at max_dets
  - greedy matching at each OKS threshold; ground truth that is crowd,
    unlabeled or outside the open area range is ignored, and unmatched
    detections outside the area range are ignored too
  - precision envelope made monotone, then sampled at 101 recall points
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from wholebody_kit.models.schemas import (
    AnnotationSet,
    DetectionRecord,
    DetectionSet,
    EvalParams,
    EvalReport,
    MatchResult,
    PartKind,
    PersonAnnotation,
)
from wholebody_kit.services.coco_io import check_detection_refs
from wholebody_kit.services.evaluation.oks import Sigmas, fit_length, oks_matrix, sigma_array
from wholebody_kit.services.keypoint_schema import part_range
from wholebody_kit.utils import config

logger = logging.getLogger(__name__)

AreaRange = Tuple[float, float]


@dataclass
class ImageEval:
    """Everything the matcher needs for one image, detections in evaluation order"""
    image_id: int
    gt_ids: List[int]
    gt_areas: np.ndarray
    gt_crowd: np.ndarray
    gt_flagged: np.ndarray
    det_ids: np.ndarray
    det_scores: np.ndarray
    det_areas: np.ndarray
    ious: np.ndarray


@dataclass
class ImageMatch:
    dtm: np.ndarray      # (T, D) matched GT index or -1
    dt_ignore: np.ndarray
    gtm: np.ndarray      # (T, G) matched detection index or -1
    gt_ignore: np.ndarray


# ============================================================================
# Per-Image Preparation
# ============================================================================

def _slice(kps: np.ndarray, part: Optional[PartKind]) -> np.ndarray:
    if part is None:
        return kps
    slots = part_range(part)
    if len(kps) == len(slots):
        return kps
    if len(kps) < slots.stop:
        return np.zeros((0, 3))
    return kps[slots.start:slots.stop]


def _part_sigmas(sigmas: np.ndarray, part: Optional[PartKind], k: int) -> np.ndarray:
    if part is None:
        return sigmas[:k]
    slots = part_range(part)
    return sigmas[slots.start:slots.stop][:k]


def keypoint_box_area(kps: np.ndarray) -> float:
    """Area of the box around keypoints with a positive third value"""
    labeled = kps[kps[:, 2] > 0, :2]
    if len(labeled) == 0:
        return 0.0
    extent = labeled.max(axis=0) - labeled.min(axis=0)
    return float(extent[0] * extent[1])


def prepare_image(
    image_id: int,
    gts: Sequence[PersonAnnotation],
    dets: Sequence[DetectionRecord],
    sigmas: np.ndarray,
    max_dets: Optional[int] = None,
    part: Optional[PartKind] = None,
) -> ImageEval:
    """
    Slice keypoints to the evaluated range, order and cap the detections, and
    compute the detection x GT OKS matrix once for all thresholds and areas.
    """
    gt_kps = [_slice(gt.as_array(), part) for gt in gts]

    candidates = []
    for det in dets:
        full = det.as_array()
        kps = _slice(full, part)
        if part is not None and not (kps[:, 2] > 0).any():
            continue
        candidates.append((det, kps, keypoint_box_area(full)))
    candidates.sort(key=lambda c: (-c[0].score, c[0].id if c[0].id is not None else np.inf))
    if max_dets is not None:
        candidates = candidates[:max_dets]

    ious = np.zeros((len(candidates), len(gts)))
    for g, (gt, kps) in enumerate(zip(gts, gt_kps)):
        if not candidates:
            break
        stacked = np.stack([fit_length(c[1], len(kps)) for c in candidates])
        ious[:, g] = oks_matrix(stacked, kps, gt.area, _part_sigmas(sigmas, part, len(kps)))

    return ImageEval(
        image_id=image_id,
        gt_ids=[gt.id for gt in gts],
        gt_areas=np.array([gt.area for gt in gts], dtype=np.float64),
        gt_crowd=np.array([bool(gt.iscrowd) for gt in gts], dtype=bool),
        gt_flagged=np.array(
            [bool(gt.iscrowd) or not (kps[:, 2] > 0).any() for gt, kps in zip(gts, gt_kps)], dtype=bool
        ),
        det_ids=np.array([c[0].id if c[0].id is not None else -1 for c in candidates], dtype=np.int64),
        det_scores=np.array([c[0].score for c in candidates], dtype=np.float64),
        det_areas=np.array([c[2] for c in candidates], dtype=np.float64),
        ious=ious,
    )


# ============================================================================
# Matching
# ============================================================================

def match_prepared(image: ImageEval, thresholds: Sequence[float], area_range: AreaRange) -> ImageMatch:
    """
    Greedy matching at every threshold.

    Each detection, in order, takes the free GT with the highest OKS that
    reaches the threshold (ties keep the earlier GT); non-ignored GT is
    preferred over ignored GT. Crowd GT can absorb several detections.
    """
    lo, hi = area_range
    num_t, num_d, num_g = len(thresholds), len(image.det_ids), len(image.gt_ids)
    gt_ignore = image.gt_flagged | (image.gt_areas <= lo) | (image.gt_areas >= hi)
    gt_order = np.argsort(gt_ignore, kind="mergesort")

    dtm = np.full((num_t, num_d), -1, dtype=np.int64)
    gtm = np.full((num_t, num_g), -1, dtype=np.int64)
    dt_ignore = np.zeros((num_t, num_d), dtype=bool)

    for t, threshold in enumerate(thresholds):
        for d in range(num_d):
            best, m = threshold, -1
            for g in gt_order:
                if gtm[t, g] >= 0 and not image.gt_crowd[g]:
                    continue
                if m >= 0 and not gt_ignore[m] and gt_ignore[g]:
                    break
                value = image.ious[d, g]
                if value < threshold or (m >= 0 and value <= best):
                    continue
                best, m = value, g
            if m < 0:
                continue
            dt_ignore[t, d] = gt_ignore[m]
            dtm[t, d] = m
            gtm[t, m] = d

    outside = (image.det_areas <= lo) | (image.det_areas >= hi)
    dt_ignore |= (dtm < 0) & outside[None, :]
    return ImageMatch(dtm=dtm, dt_ignore=dt_ignore, gtm=gtm, gt_ignore=gt_ignore)


def match_image(
    dets: Sequence[DetectionRecord],
    gts: Sequence[PersonAnnotation],
    threshold: float,
    sigmas: Optional[Sigmas] = None,
    area_range: AreaRange = config.AREA_RANGES["all"],
) -> MatchResult:
    """Greedy matching of one image's detections to its ground truth at one OKS threshold"""
    image_ids = {gt.image_id for gt in gts} | {det.image_id for det in dets}
    image = prepare_image(min(image_ids, default=0), gts, dets, sigma_array(sigmas))
    match = match_prepared(image, [threshold], area_range)

    det_matches, det_oks = [], []
    for d in range(len(image.det_ids)):
        m = int(match.dtm[0, d])
        det_matches.append(image.gt_ids[m] if m >= 0 else None)
        if m >= 0:
            det_oks.append(float(image.ious[d, m]))
        else:
            det_oks.append(float(image.ious[d].max()) if len(image.gt_ids) else 0.0)

    return MatchResult(
        det_ids=[int(i) for i in image.det_ids],
        det_scores=[float(s) for s in image.det_scores],
        det_matches=det_matches,
        det_oks=det_oks,
        det_ignore=[bool(v) for v in match.dt_ignore[0]],
        gt_ids=list(image.gt_ids),
        gt_matched=[bool(v >= 0) for v in match.gtm[0]],
        gt_ignore=[bool(v) for v in match.gt_ignore],
    )


# ============================================================================
# Accumulation
# ============================================================================

def accumulate(images: Sequence[ImageEval], matches: Sequence[ImageMatch],
               params: EvalParams) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """
    Precision (interpolated, averaged over recall points) and final recall
    per threshold; None when the area range holds no non-ignored GT.
    """
    npig = int(sum(np.count_nonzero(~m.gt_ignore) for m in matches))
    if npig == 0:
        return None

    thresholds = params.oks_thresholds
    recall_points = params.recall_thresholds
    precision = np.zeros(len(thresholds))
    recall = np.zeros(len(thresholds))

    scores = np.concatenate([image.det_scores for image in images]) if images else np.zeros(0)
    det_ids = np.concatenate([image.det_ids for image in images]) if images else np.zeros(0)
    image_rank = np.concatenate([np.full(len(image.det_ids), i) for i, image in enumerate(images)]) \
        if images else np.zeros(0)
    order = np.lexsort((image_rank, det_ids, -scores))

    if len(order) == 0:
        return precision, recall

    dtm = np.concatenate([m.dtm for m in matches], axis=1)[:, order]
    dt_ignore = np.concatenate([m.dt_ignore for m in matches], axis=1)[:, order]
    tps = (dtm >= 0) & ~dt_ignore
    fps = (dtm < 0) & ~dt_ignore
    tp_sum = np.cumsum(tps, axis=1).astype(np.float64)
    fp_sum = np.cumsum(fps, axis=1).astype(np.float64)

    nd = len(order)
    for t in range(len(thresholds)):
        tp, fp = tp_sum[t], fp_sum[t]
        rc = tp / npig
        total = tp + fp
        pr = np.divide(tp, total, out=np.zeros_like(tp), where=total > 0)
        pr = np.maximum.accumulate(pr[::-1])[::-1]

        inds = np.searchsorted(rc, recall_points, side="left")
        q = np.where(inds < nd, pr[np.minimum(inds, nd - 1)], 0.0)
        precision[t] = q.mean()
        recall[t] = rc[-1]
    return precision, recall


def _summarize(per_range: Dict[str, Optional[Tuple[np.ndarray, np.ndarray]]], params: EvalParams) -> EvalReport:
    thresholds = params.oks_thresholds
    i50 = int(np.argmin(np.abs(thresholds - 0.5)))
    i75 = int(np.argmin(np.abs(thresholds - 0.75)))

    values: Dict[str, Optional[float]] = {}
    all_range = per_range["all"]
    if all_range is not None:
        precision, recall = all_range
        values.update(
            mAP=float(precision.mean()), AP50=float(precision[i50]), AP75=float(precision[i75]),
            mAR=float(recall.mean()), AR50=float(recall[i50]), AR75=float(recall[i75]),
        )
    for name, suffix in (("medium", "M"), ("large", "L")):
        result = per_range[name]
        if result is not None:
            values[f"AP{suffix}"] = float(result[0].mean())
            values[f"AR{suffix}"] = float(result[1].mean())
    return EvalReport(**values)


# ============================================================================
# Entry Points
# ============================================================================

def _run(gt: AnnotationSet, results: DetectionSet, sigmas: Optional[Sigmas], params: Optional[EvalParams],
         part: Optional[PartKind], workers: int) -> EvalReport:
    params = params or EvalParams()
    sigma_values = sigma_array(sigmas)
    persons = gt.persons_by_image()
    dets = results.by_image()
    image_ids = sorted({image.id for image in gt.images} | set(dets))

    def prepare(image_id: int) -> ImageEval:
        return prepare_image(
            image_id, persons.get(image_id, []), dets.get(image_id, []), sigma_values, params.max_dets, part
        )

    if workers > 1 and len(image_ids) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            images = list(pool.map(prepare, image_ids))
    else:
        images = [prepare(image_id) for image_id in image_ids]
    images = [image for image in images if len(image.gt_ids) or len(image.det_ids)]

    per_range = {}
    for name, area_range in config.AREA_RANGES.items():
        matches = [match_prepared(image, params.oks_thresholds, area_range) for image in images]
        per_range[name] = accumulate(images, matches, params)
    return _summarize(per_range, params)


def evaluate(gt: AnnotationSet, results: DetectionSet, sigmas: Optional[Sigmas] = None,
             params: Optional[EvalParams] = None, workers: int = 1) -> EvalReport:
    """
    Whole-body OKS evaluation.

    Results of a single part category are evaluated against that part of
    the ground truth.

    Raises:
        DanglingImageRef: a result names an image missing from the ground truth
    """
    check_detection_refs(results, gt)
    part = results.category if isinstance(results.category, PartKind) else None
    report = _run(gt, results, sigmas, params, part, workers)
    logger.info("Evaluated %d detection(s) on %d person(s): mAP=%s", len(results), len(gt), report.mAP)
    return report


def per_part_report(gt: AnnotationSet, results: DetectionSet, sigmas: Optional[Sigmas] = None,
                    params: Optional[EvalParams] = None, workers: int = 1) -> Dict[PartKind, EvalReport]:
    """
    The same protocol restricted to each part with part-only OKS.

    Part-category results only describe their own part; every other part
    gets an undefined report.
    """
    check_detection_refs(results, gt)
    if isinstance(results.category, PartKind):
        return {
            part: _run(gt, results, sigmas, params, part, workers) if part is results.category else EvalReport()
            for part in PartKind
        }
    return {part: _run(gt, results, sigmas, params, part, workers) for part in PartKind}
