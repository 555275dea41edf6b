"""
Dataset Summary Statistics
Persons-per-image histogram, per-part labeled-keypoint rates and area distribution
"""

import logging
from collections import Counter
from pathlib import Path
from typing import Dict, Union

import numpy as np

from wholebody_kit.models.schemas import AnnotationSet, AreaSummary, DatasetStats, PartKind
from wholebody_kit.services.coco_io import load_ground_truth
from wholebody_kit.services.keypoint_schema import part_range
from wholebody_kit.utils import config

logger = logging.getLogger(__name__)


def labeled_rates(gt: AnnotationSet) -> Dict[str, float]:
    """Fraction of each part's keypoint slots labeled (v > 0) over all persons"""
    rates = {}
    for kind in PartKind:
        slots = part_range(kind)
        labeled = total = 0
        for person in gt.annotations:
            total += len(slots)
            kps = person.as_array()
            if len(kps) >= slots.stop:
                labeled += int(np.count_nonzero(kps[slots.start:slots.stop, 2] > 0))
        rates[kind.value] = labeled / total if total else 0.0
    return rates


def area_summary(gt: AnnotationSet) -> AreaSummary:
    areas = np.array([person.area for person in gt.annotations], dtype=np.float64)
    if len(areas) == 0:
        return AreaSummary()

    medium_lo, medium_hi = config.AREA_RANGES["medium"]
    # open buckets as in evaluation: an area of exactly 96² is neither medium nor large
    return AreaSummary(
        small=int(np.count_nonzero(areas <= medium_lo)),
        medium=int(np.count_nonzero((areas > medium_lo) & (areas < medium_hi))),
        large=int(np.count_nonzero(areas > medium_hi)),
        min=float(areas.min()),
        median=float(np.median(areas)),
        max=float(areas.max()),
    )


def dataset_stats(gt: AnnotationSet) -> DatasetStats:
    """Summary of a parsed annotation set"""
    per_image = Counter(person.image_id for person in gt.annotations)
    histogram = Counter(per_image.get(image.id, 0) for image in gt.images)
    return DatasetStats(
        images=len(gt.images),
        persons=len(gt.annotations),
        persons_per_image=dict(sorted(histogram.items())),
        labeled_rate=labeled_rates(gt),
        area=area_summary(gt),
    )


def stats(path: Union[str, Path]) -> DatasetStats:
    """Summary of an annotation file; parse errors propagate"""
    summary = dataset_stats(load_ground_truth(path))
    logger.info("Stats for %s: %d image(s), %d person(s)", path, summary.images, summary.persons)
    return summary
