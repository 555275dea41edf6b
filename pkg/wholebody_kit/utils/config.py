# Configuration & Constants
import json
import math
import logging
from pathlib import Path
from typing import Optional

from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from wholebody_kit.utils.exceptions import ConfigError

logger = logging.getLogger(__name__)


# API Configuration
API_TITLE = "Whole-Body Pose Toolkit"
API_VERSION = "1.0.0"
API_DESCRIPTION = (
    "Builds 133-keypoint whole-body pseudo-label annotations from body ground truth "
    "and part detector outputs, and evaluates whole-body predictions with OKS AP/AR"
)

# CORS
CORS_ORIGINS = ["*"]
CORS_ALLOW_CREDENTIALS = True
CORS_ALLOW_METHODS = ["*"]
CORS_ALLOW_HEADERS = ["*"]

# ============================================================================
# Keypoint Layout
# ============================================================================
NUM_BODY_KEYPOINTS = 17
NUM_FOOT_KEYPOINTS = 6
NUM_FACE_KEYPOINTS = 68
NUM_HAND_KEYPOINTS = 21
NUM_WHOLEBODY_KEYPOINTS = (
    NUM_BODY_KEYPOINTS + NUM_FOOT_KEYPOINTS + NUM_FACE_KEYPOINTS + 2 * NUM_HAND_KEYPOINTS
)
ALLOWED_GT_KEYPOINT_COUNTS = (NUM_BODY_KEYPOINTS, NUM_WHOLEBODY_KEYPOINTS)

# Standard COCO body falloff constants
COCO_BODY_SIGMAS = (
    0.026, 0.025, 0.025, 0.035, 0.035, 0.079, 0.079, 0.072, 0.072,
    0.062, 0.062, 0.107, 0.107, 0.087, 0.087, 0.089, 0.089,
)
DEFAULT_FOOT_SIGMA = 0.035
DEFAULT_FACE_SIGMA = 0.012
DEFAULT_HAND_SIGMA = 0.018

# ============================================================================
# Proposal / Merge Defaults
# ============================================================================
FACE_EXPANSION = 1.6
FACE_MIN_SIDE = 20.0
HAND_EXTENSION = 0.15
HAND_SCALE = 1.2
HAND_MIN_SIDE = 20.0
FOOT_EXTENSION = 0.2
FOOT_SCALE = 0.8
FOOT_MIN_SIDE = 20.0

MERGE_IOU_THRESHOLD = 0.3
MERGE_CONFIDENCE_THRESHOLD = 0.05

# ============================================================================
# Heatmap Codec
# ============================================================================
INPUT_SIZE = (256, 192)  # (height, width)
HEATMAP_SIZE = (64, 48)  # (height, width)
HEATMAP_STRIDE = 4
HEATMAP_SIGMA = 2.0
CROP_PADDING = 1.25

# ============================================================================
# Pose NMS Defaults
# ============================================================================
NMS_LAMBDA = 1.0
NMS_SIGMA_SOFT = 0.1
NMS_ETA = 1.2
NMS_SCORE_FLOOR = 0.05

# ============================================================================
# Evaluation Defaults
# ============================================================================
OKS_THRESHOLD_START = 0.50
OKS_THRESHOLD_STOP = 0.95
NUM_OKS_THRESHOLDS = 10
NUM_RECALL_POINTS = 101
MAX_DETECTIONS = 20
# open intervals: medium is 32² < area < 96², large is area > 96²
AREA_RANGES = {
    "all": (-math.inf, math.inf),
    "medium": (32.0 ** 2, 96.0 ** 2),
    "large": (96.0 ** 2, math.inf),
}
UNDEFINED_METRIC = -1.0

# ============================================================================
# CLI Exit Codes
# ============================================================================
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3


class Settings(BaseSettings):
    """Process-level settings read from the environment (and .env)."""

    model_config = SettingsConfigDict(env_prefix="WHOLEBODY_", env_file=".env", extra="ignore")

    workers: int = 1
    log_level: str = "INFO"
    config_path: Optional[Path] = None


def get_settings() -> Settings:
    return Settings()


def configure_logging(level: str = "INFO") -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def load_tool_config(path: Optional[Path] = None):
    """
    Load the JSON tool configuration (proposal / merge / nms / sigma / heatmap /
    evaluation parameters). A missing path yields the defaults.

    Raises:
        ConfigError: unreadable JSON or values rejected by the parameter models
    """
    from wholebody_kit.models.schemas import ToolConfig

    if path is None:
        return ToolConfig()

    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e

    try:
        config = ToolConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"Config file {path} has invalid values: {e}") from e

    logger.info("Loaded tool config from %s", path)
    return config
