"""
Skeleton Rendering

Draws every person of one image as a skeleton on a blank canvas of the
image's size and exports it as SVG through reportlab's graphics layer.
The drawing is planned first (markers and segments in image coordinates)
so callers can inspect exactly what will be drawn.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List

from reportlab.graphics import renderSVG
from reportlab.graphics.shapes import Circle, Drawing, Line
from reportlab.lib.colors import HexColor

from wholebody_kit.models.schemas import AnnotationSet, PartKind, RenderSpec
from wholebody_kit.services.coco_io import load_ground_truth
from wholebody_kit.services.keypoint_schema import part_of, skeleton
from wholebody_kit.utils.exceptions import UnknownImageId

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Marker:
    x: float
    y: float
    part: PartKind


@dataclass(frozen=True)
class Segment:
    x1: float
    y1: float
    x2: float
    y2: float
    part: PartKind


@dataclass
class RenderPlan:
    width: int
    height: int
    markers: List[Marker] = field(default_factory=list)
    segments: List[Segment] = field(default_factory=list)


def plan_render(gt: AnnotationSet, image_id: int) -> RenderPlan:
    """
    One marker per labeled keypoint and one segment per skeleton edge whose
    endpoints are both labeled, for every person of the image.

    Raises:
        UnknownImageId: the image is not in the annotation set
    """
    image = gt.images_by_id().get(image_id)
    if image is None:
        raise UnknownImageId(image_id)

    plan = RenderPlan(width=image.width, height=image.height)
    edges = skeleton()
    for person in gt.persons_by_image().get(image_id, []):
        kps = person.as_array()
        count = len(kps)
        for a, b in edges:
            if a < count and b < count and kps[a, 2] > 0 and kps[b, 2] > 0:
                # edges are colored by their distal endpoint
                plan.segments.append(
                    Segment(float(kps[a, 0]), float(kps[a, 1]), float(kps[b, 0]), float(kps[b, 1]), part_of(b))
                )
        for index in range(count):
            if kps[index, 2] > 0:
                plan.markers.append(Marker(float(kps[index, 0]), float(kps[index, 1]), part_of(index)))
    return plan


def draw_plan(plan: RenderPlan, spec: RenderSpec) -> bytes:
    """SVG bytes for a plan; image y grows downward, so it is flipped for the canvas"""
    drawing = Drawing(plan.width, plan.height)
    for segment in plan.segments:
        drawing.add(Line(
            segment.x1, plan.height - segment.y1, segment.x2, plan.height - segment.y2,
            strokeColor=HexColor(spec.colors[segment.part.value]),
            strokeWidth=spec.stroke_widths[segment.part.value],
        ))
    for marker in plan.markers:
        drawing.add(Circle(
            marker.x, plan.height - marker.y, spec.keypoint_radius,
            fillColor=HexColor(spec.colors[marker.part.value]), strokeColor=None,
        ))
    return renderSVG.drawToString(drawing).encode("utf-8")


def render_set(gt: AnnotationSet, spec: RenderSpec) -> bytes:
    """Render one image of an already parsed annotation set"""
    plan = plan_render(gt, spec.image_id)
    svg = draw_plan(plan, spec)
    logger.debug(
        "Rendered image %d: %d marker(s), %d segment(s)", spec.image_id, len(plan.markers), len(plan.segments)
    )
    return svg


def render(spec: RenderSpec) -> bytes:
    """
    Render the skeletons of one image of an annotation file.

    Returns:
        SVG bytes, identical for identical inputs; also written to
        spec.output_path when set

    Raises:
        UnknownImageId, plus any parse error of the annotation file
    """
    svg = render_set(load_ground_truth(spec.annotation_path), spec)
    if spec.output_path:
        Path(spec.output_path).write_bytes(svg)
        logger.info("Wrote skeleton render of image %d to %s", spec.image_id, spec.output_path)
    return svg
