# Evaluation Router - OKS AP / AR and the keypoint schema sidecar
from fastapi import APIRouter, File, Form, HTTPException, UploadFile

from wholebody_kit.models.schemas import EvaluationResponse
from wholebody_kit.services import coco_io, evaluation
from wholebody_kit.services.keypoint_schema import schema_sidecar
from wholebody_kit.utils.config import get_settings
from wholebody_kit.utils.exceptions import WholebodyError

router = APIRouter()


@router.post("/evaluate", response_model=EvaluationResponse)
async def evaluate_results(
    gt: UploadFile = File(...),
    results: UploadFile = File(...),
    per_part: bool = Form(False),
):
    """
    Evaluate whole-body results against ground truth.

    **Returns:**
    - metrics: mAP, AP50, AP75, APM, APL, mAR, AR50, AR75, ARM, ARL (-1 when undefined)
    - per_part: the same metrics per keypoint group when requested
    """
    try:
        annotations = coco_io.parse_ground_truth(await gt.read())
        detections = coco_io.parse_detections(await results.read())
        workers = get_settings().workers

        report = evaluation.evaluate(annotations, detections, workers=workers)
        parts = None
        if per_part:
            parts = {
                kind.value: part_report.as_machine()
                for kind, part_report in evaluation.per_part_report(annotations, detections, workers=workers).items()
            }
        return EvaluationResponse(metrics=report.as_machine(), per_part=parts)
    except WholebodyError:
        raise
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Error evaluating results: {str(e)}")


@router.get("/schema")
async def keypoint_schema():
    """
    Keypoint layout, names, skeleton and OKS sigmas of the 133-keypoint format.
    """
    return schema_sidecar()
