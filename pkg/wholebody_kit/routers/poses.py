# Poses Router - Parametric pose NMS over inline results
import json

from fastapi import APIRouter, HTTPException

from wholebody_kit.models.schemas import NmsRequest, NmsResponse
from wholebody_kit.services import coco_io, pose_nms
from wholebody_kit.utils.config import get_settings
from wholebody_kit.utils.exceptions import WholebodyError

router = APIRouter()


@router.post("/nms", response_model=NmsResponse)
async def suppress_poses(request: NmsRequest):
    """
    Remove redundant pose estimates image by image.

    **Parameters:**
    - results: COCO results records (image_id, keypoints, score)
    - category: "wholebody" (default), "body" or a part name
    - params: lambda, sigma_soft, eta, score_floor
    """
    try:
        detections = coco_io.parse_detections(json.dumps(request.results), request.category)
        kept = pose_nms.nms_results(detections, request.params, workers=get_settings().workers)
        return NmsResponse(
            input_count=len(detections),
            kept_count=len(kept),
            kept=coco_io.results_payload(kept),
        )
    except WholebodyError:
        raise
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Error running pose NMS: {str(e)}")
