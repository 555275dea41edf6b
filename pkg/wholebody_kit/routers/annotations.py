# Annotations Router - Validation, statistics, proposals, merging and rendering of COCO files
import logging
from typing import Optional

from fastapi import APIRouter, File, Form, HTTPException, UploadFile
from fastapi.responses import Response

from wholebody_kit.models.schemas import (
    DatasetStats,
    MergeParams,
    PartKind,
    RenderSpec,
    ValidationReport,
)
from wholebody_kit.services import coco_io, dataset, merge, proposal
from wholebody_kit.utils.config import get_settings
from wholebody_kit.utils.exceptions import WholebodyError

logger = logging.getLogger(__name__)

router = APIRouter()


async def _read(upload: Optional[UploadFile]) -> Optional[bytes]:
    if upload is None:
        return None
    return await upload.read()


@router.post("/validate", response_model=ValidationReport)
async def validate_annotations(file: UploadFile = File(...)):
    """
    Validate a COCO ground-truth file.

    **Returns:**
    - errors: every violation that makes the file unparseable
    - warnings: out-of-frame keypoints
    """
    try:
        return coco_io.validate_document(await file.read(), file.filename)
    except WholebodyError:
        raise
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Error validating file: {str(e)}")


@router.post("/stats", response_model=DatasetStats)
async def annotation_stats(file: UploadFile = File(...)):
    """
    Summary statistics: persons per image, per-part labeled rates, area distribution.
    """
    try:
        return dataset.dataset_stats(coco_io.parse_ground_truth(await file.read()))
    except WholebodyError:
        raise
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Error computing statistics: {str(e)}")


@router.post("/propose")
async def propose_boxes(file: UploadFile = File(...)):
    """
    Face, hand and foot boxes for every person, clipped to the image.
    """
    try:
        gt = coco_io.parse_ground_truth(await file.read())
        proposals = proposal.propose_dataset(gt)
        return {
            "status": "success",
            "count": len(proposals),
            "proposals": [p.model_dump(mode="json") for p in proposals],
        }
    except WholebodyError:
        raise
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Error building proposals: {str(e)}")


@router.post("/merge")
async def merge_annotations(
    gt: UploadFile = File(...),
    foot: Optional[UploadFile] = File(None),
    face: Optional[UploadFile] = File(None),
    lhand: Optional[UploadFile] = File(None),
    rhand: Optional[UploadFile] = File(None),
    iou_threshold: Optional[float] = Form(None),
):
    """
    Merge body ground truth with part detections into 133-keypoint annotations.

    **Parameters:**
    - gt: body ground truth (required)
    - foot / face / lhand / rhand: COCO results files of the part detectors (optional)
    - iou_threshold: association threshold between detection and proposal boxes
    """
    try:
        params = MergeParams() if iou_threshold is None else MergeParams(iou_threshold=iou_threshold)
        annotations = coco_io.parse_ground_truth(await gt.read())
        parts = {}
        for kind, upload in (
            (PartKind.FOOT, foot),
            (PartKind.FACE, face),
            (PartKind.LEFT_HAND, lhand),
            (PartKind.RIGHT_HAND, rhand),
        ):
            data = await _read(upload)
            parts[kind] = coco_io.parse_detections(data, kind) if data is not None else None

        merged = merge.merge_dataset(
            annotations,
            foot=parts[PartKind.FOOT],
            face=parts[PartKind.FACE],
            lhand=parts[PartKind.LEFT_HAND],
            rhand=parts[PartKind.RIGHT_HAND],
            params=params,
            workers=get_settings().workers,
        )
        return coco_io.annotation_payload(merged)
    except WholebodyError:
        raise
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Error merging annotations: {str(e)}")


@router.post("/render")
async def render_image(file: UploadFile = File(...), image_id: int = Form(...)):
    """
    SVG skeletons of every person of one image, on a blank canvas of the image size.
    """
    try:
        gt = coco_io.parse_ground_truth(await file.read())
        spec = RenderSpec(annotation_path=file.filename or "upload", image_id=image_id)
        svg = dataset.render_set(gt, spec)
        return Response(content=svg, media_type="image/svg+xml")
    except WholebodyError:
        raise
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Error rendering image: {str(e)}")
