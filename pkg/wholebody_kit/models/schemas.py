# Pydantic Models for Domain Records, Parameters and Request/Response Schemas
import math
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from wholebody_kit.utils import config

Number = Union[int, float]
WHOLEBODY = "wholebody"


class PartKind(str, Enum):
    """The five keypoint groups of the whole-body layout, in index order"""
    BODY = "body"
    FOOT = "foot"
    FACE = "face"
    LEFT_HAND = "left_hand"
    RIGHT_HAND = "right_hand"


# ============================================================================
# Geometry
# ============================================================================

class Box(BaseModel):
    """Axis-aligned box in image pixels, (x, y) is the top-left corner"""
    model_config = ConfigDict(frozen=True)

    x: float
    y: float
    w: float = Field(..., ge=0)
    h: float = Field(..., ge=0)

    @classmethod
    def from_xyxy(cls, x1: float, y1: float, x2: float, y2: float) -> "Box":
        return cls(x=x1, y=y1, w=max(x2 - x1, 0.0), h=max(y2 - y1, 0.0))

    @classmethod
    def square(cls, cx: float, cy: float, side: float) -> "Box":
        return cls(x=cx - side / 2.0, y=cy - side / 2.0, w=side, h=side)

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def center(self) -> Tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    @property
    def area(self) -> float:
        return self.w * self.h

    def iou(self, other: "Box") -> float:
        iw = min(self.x2, other.x2) - max(self.x, other.x)
        ih = min(self.y2, other.y2) - max(self.y, other.y)
        if iw <= 0 or ih <= 0:
            return 0.0
        inter = iw * ih
        union = self.area + other.area - inter
        return inter / union if union > 0 else 0.0

    def enclosing(self, other: "Box") -> "Box":
        return Box.from_xyxy(
            min(self.x, other.x), min(self.y, other.y), max(self.x2, other.x2), max(self.y2, other.y2)
        )

    def to_list(self) -> List[float]:
        return [self.x, self.y, self.w, self.h]


def _box_from_list(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        if len(value) != 4:
            raise ValueError("bbox must have 4 values [x, y, w, h]")
        x, y, w, h = value
        return {"x": x, "y": y, "w": w, "h": h}
    return value


# ============================================================================
# COCO Records
# ============================================================================

class ImageRecord(BaseModel):
    """COCO image entry"""
    model_config = ConfigDict(frozen=True, extra="allow")

    id: int
    width: int = Field(..., gt=0)
    height: int = Field(..., gt=0)
    file_name: str = ""


class Category(BaseModel):
    """COCO category entry (keypoint names and skeleton are carried opaquely)"""
    model_config = ConfigDict(frozen=True, extra="allow")

    id: int
    name: str = "person"


class PersonAnnotation(BaseModel):
    """One annotated person: flat (x, y, v) triples plus box and area"""
    model_config = ConfigDict(frozen=True, extra="allow")

    id: int
    image_id: int
    category_id: int = 1
    keypoints: List[Number]
    num_keypoints: int = 0
    bbox: Optional[Box] = None
    area: float = 0.0
    iscrowd: int = 0

    @field_validator("bbox", mode="before")
    @classmethod
    def _normalize_bbox(cls, value: Any) -> Any:
        return _box_from_list(value)

    @field_serializer("bbox")
    def _serialize_bbox(self, bbox: Optional[Box]) -> Optional[List[float]]:
        return bbox.to_list() if bbox is not None else None

    @property
    def keypoint_count(self) -> int:
        return len(self.keypoints) // 3

    def as_array(self) -> np.ndarray:
        return np.asarray(self.keypoints, dtype=np.float64).reshape(-1, 3)

    def labeled_count(self) -> int:
        return sum(1 for v in self.keypoints[2::3] if v > 0)


class AnnotationSet(BaseModel):
    """Parsed COCO keypoint ground truth"""
    model_config = ConfigDict(frozen=True, extra="allow")

    images: List[ImageRecord] = []
    annotations: List[PersonAnnotation] = []
    categories: List[Category] = []

    def images_by_id(self) -> Dict[int, ImageRecord]:
        return {image.id: image for image in self.images}

    def persons_by_image(self) -> Dict[int, List[PersonAnnotation]]:
        grouped: Dict[int, List[PersonAnnotation]] = {image.id: [] for image in self.images}
        for person in self.annotations:
            grouped.setdefault(person.image_id, []).append(person)
        return grouped

    def __len__(self) -> int:
        return len(self.annotations)


class DetectionRecord(BaseModel):
    """One detector / estimator output in COCO results form"""
    model_config = ConfigDict(frozen=True, extra="allow")

    id: Optional[int] = None
    image_id: int
    category_id: int = 1
    keypoints: List[Number]
    score: float
    category: Union[PartKind, Literal["wholebody"]] = WHOLEBODY
    bbox: Optional[Box] = None
    area: Optional[float] = None

    @field_validator("bbox", mode="before")
    @classmethod
    def _normalize_bbox(cls, value: Any) -> Any:
        return _box_from_list(value)

    @field_serializer("bbox")
    def _serialize_bbox(self, bbox: Optional[Box]) -> Optional[List[float]]:
        return bbox.to_list() if bbox is not None else None

    def as_array(self) -> np.ndarray:
        return np.asarray(self.keypoints, dtype=np.float64).reshape(-1, 3)


class DetectionSet(BaseModel):
    """Detections of one category, sorted by (image_id, descending score, id)"""
    model_config = ConfigDict(frozen=True)

    category: Union[PartKind, Literal["wholebody"]] = WHOLEBODY
    records: List[DetectionRecord] = []

    def by_image(self) -> Dict[int, List[DetectionRecord]]:
        grouped: Dict[int, List[DetectionRecord]] = {}
        for record in self.records:
            grouped.setdefault(record.image_id, []).append(record)
        return grouped

    def __len__(self) -> int:
        return len(self.records)


class FullBodyPose(BaseModel):
    """
    A pose as ordered (x, y, v) triples. The third value is a visibility flag
    for annotations and a confidence for predictions; 0 means unlabeled.
    133 triples for whole-body poses, 17 for body-only poses.
    """
    model_config = ConfigDict(frozen=True)

    keypoints: List[float]
    score: float = 1.0
    person_id: int = 0
    image_id: int = 0

    @field_validator("keypoints")
    @classmethod
    def _check_length(cls, value: List[float]) -> List[float]:
        allowed = [3 * k for k in config.ALLOWED_GT_KEYPOINT_COUNTS]
        if len(value) not in allowed:
            raise ValueError(f"keypoints length {len(value)} not in {allowed}")
        return value

    @property
    def keypoint_count(self) -> int:
        return len(self.keypoints) // 3

    def as_array(self) -> np.ndarray:
        return np.asarray(self.keypoints, dtype=np.float64).reshape(-1, 3)

    @classmethod
    def from_array(cls, array: np.ndarray, **fields: Any) -> "FullBodyPose":
        return cls(keypoints=[float(v) for v in np.asarray(array, dtype=np.float64).reshape(-1)], **fields)


# ============================================================================
# Parameters
# ============================================================================

class ProposalParams(BaseModel):
    """Face / hand / foot box construction constants"""
    face_expansion: float = Field(default=config.FACE_EXPANSION, gt=0)
    face_min_side: float = Field(default=config.FACE_MIN_SIDE, ge=0)
    hand_extension: float = Field(default=config.HAND_EXTENSION, ge=0)
    hand_scale: float = Field(default=config.HAND_SCALE, gt=0)
    hand_min_side: float = Field(default=config.HAND_MIN_SIDE, ge=0)
    foot_extension: float = Field(default=config.FOOT_EXTENSION, ge=0)
    foot_scale: float = Field(default=config.FOOT_SCALE, gt=0)
    foot_min_side: float = Field(default=config.FOOT_MIN_SIDE, ge=0)


class MergeParams(BaseModel):
    """Part-to-person association and pseudo-label filtering"""
    iou_threshold: float = Field(default=config.MERGE_IOU_THRESHOLD, ge=0, le=1)
    confidence_threshold: float = Field(default=config.MERGE_CONFIDENCE_THRESHOLD, ge=0)
    proposal: ProposalParams = ProposalParams()


class NmsParams(BaseModel):
    """Parametric pose NMS constants"""
    model_config = ConfigDict(populate_by_name=True)

    lambda_: float = Field(default=config.NMS_LAMBDA, gt=0, alias="lambda")
    sigma_soft: float = Field(default=config.NMS_SIGMA_SOFT, gt=0)
    eta: float = Field(default=config.NMS_ETA, gt=0)
    score_floor: float = Field(default=config.NMS_SCORE_FLOOR, gt=0)

    @field_validator("lambda_", "sigma_soft", "eta", "score_floor")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("NMS parameters must be finite")
        return value


SigmaValue = Union[float, List[float]]


class SigmaConfig(BaseModel):
    """Per-part falloff constants; a scalar applies to every keypoint of the part"""
    foot: SigmaValue = config.DEFAULT_FOOT_SIGMA
    face: SigmaValue = config.DEFAULT_FACE_SIGMA
    hand: SigmaValue = config.DEFAULT_HAND_SIGMA


class HeatmapParams(BaseModel):
    sigma_px: float = Field(default=config.HEATMAP_SIGMA, gt=0)


class EvalParams(BaseModel):
    """OKS AP/AR protocol parameters"""
    max_dets: int = Field(default=config.MAX_DETECTIONS, gt=0)

    @property
    def oks_thresholds(self) -> np.ndarray:
        return np.linspace(
            config.OKS_THRESHOLD_START, config.OKS_THRESHOLD_STOP, config.NUM_OKS_THRESHOLDS
        )

    @property
    def recall_thresholds(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, config.NUM_RECALL_POINTS)


class ToolConfig(BaseModel):
    """Contents of the JSON configuration file"""
    proposal: ProposalParams = ProposalParams()
    merge: MergeParams = MergeParams()
    nms: NmsParams = NmsParams()
    sigmas: SigmaConfig = SigmaConfig()
    heatmap: HeatmapParams = HeatmapParams()
    evaluation: EvalParams = EvalParams()

    @model_validator(mode="after")
    def _share_proposal(self) -> "ToolConfig":
        # a top-level proposal section also drives merge association
        if "proposal" in self.model_fields_set and "proposal" not in self.merge.model_fields_set:
            self.merge = self.merge.model_copy(update={"proposal": self.proposal})
        return self


# ============================================================================
# Validation
# ============================================================================

class Violation(BaseModel):
    code: str
    message: str
    location: str = ""


class ValidationReport(BaseModel):
    """Errors make a file unparseable; warnings (e.g. out-of-frame labels) do not"""
    path: Optional[str] = None
    errors: List[Violation] = []
    warnings: List[Violation] = []

    @property
    def ok(self) -> bool:
        return not self.errors


# ============================================================================
# Proposals / Stats / Rendering
# ============================================================================

class PersonProposal(BaseModel):
    image_id: int
    person_id: int
    face_box: Optional[Box] = None
    left_hand_box: Optional[Box] = None
    right_hand_box: Optional[Box] = None
    foot_box: Optional[Box] = None

    @field_serializer("face_box", "left_hand_box", "right_hand_box", "foot_box")
    def _serialize_box(self, box: Optional[Box]) -> Optional[List[float]]:
        return box.to_list() if box is not None else None


class AreaSummary(BaseModel):
    small: int = 0
    medium: int = 0
    large: int = 0
    min: Optional[float] = None
    median: Optional[float] = None
    max: Optional[float] = None


class DatasetStats(BaseModel):
    images: int
    persons: int
    persons_per_image: Dict[int, int]
    labeled_rate: Dict[str, float]
    area: AreaSummary


class RenderSpec(BaseModel):
    annotation_path: str
    image_id: int
    output_path: Optional[str] = None
    keypoint_radius: float = Field(default=2.0, gt=0)
    stroke_widths: Dict[str, float] = {
        PartKind.BODY.value: 2.0,
        PartKind.FOOT.value: 1.5,
        PartKind.FACE.value: 0.75,
        PartKind.LEFT_HAND.value: 1.0,
        PartKind.RIGHT_HAND.value: 1.0,
    }
    colors: Dict[str, str] = {
        PartKind.BODY.value: "#1f77b4",
        PartKind.FOOT.value: "#2ca02c",
        PartKind.FACE.value: "#ff7f0e",
        PartKind.LEFT_HAND.value: "#d62728",
        PartKind.RIGHT_HAND.value: "#9467bd",
    }


# ============================================================================
# Evaluation Results
# ============================================================================

class MatchResult(BaseModel):
    """Greedy matching of one image at one OKS threshold (detections in score order)"""
    det_ids: List[int] = []
    det_scores: List[float] = []
    det_matches: List[Optional[int]] = []
    det_oks: List[float] = []
    det_ignore: List[bool] = []
    gt_ids: List[int] = []
    gt_matched: List[bool] = []
    gt_ignore: List[bool] = []


METRIC_NAMES = ("mAP", "AP50", "AP75", "APM", "APL", "mAR", "AR50", "AR75", "ARM", "ARL")


class EvalReport(BaseModel):
    """The ten summary metrics; None means undefined (no GT of that class)"""
    mAP: Optional[float] = None
    AP50: Optional[float] = None
    AP75: Optional[float] = None
    APM: Optional[float] = None
    APL: Optional[float] = None
    mAR: Optional[float] = None
    AR50: Optional[float] = None
    AR75: Optional[float] = None
    ARM: Optional[float] = None
    ARL: Optional[float] = None

    def as_machine(self) -> Dict[str, float]:
        return {
            name: (config.UNDEFINED_METRIC if getattr(self, name) is None else getattr(self, name))
            for name in METRIC_NAMES
        }


# ============================================================================
# API Requests / Responses
# ============================================================================

class NmsRequest(BaseModel):
    """Pose NMS over an inline COCO results array"""
    results: List[Dict[str, Any]]
    category: Union[PartKind, Literal["wholebody"]] = WHOLEBODY
    params: NmsParams = NmsParams()


class NmsResponse(BaseModel):
    status: str = "success"
    input_count: int
    kept_count: int
    kept: List[Dict[str, Any]]


class EvaluationResponse(BaseModel):
    status: str = "success"
    metrics: Dict[str, float]
    per_part: Optional[Dict[str, Dict[str, float]]] = None


# ============================================================================
# Generic Responses
# ============================================================================

class ErrorResponse(BaseModel):
    """Standard error response"""
    status: str = "error"
    message: str
    error_code: Optional[str] = None
    details: Optional[Dict[str, Any]] = None


class HealthCheckResponse(BaseModel):
    """Health check response"""
    status: str = "healthy"
    version: str
    services: Dict[str, str]
