"""
Per-keypoint OKS falloff constants.

Body entries are fixed to the COCO constants; foot, face and hand entries come
from SigmaConfig (a scalar per part or a full per-keypoint list).
"""

from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from wholebody_kit.models.schemas import PartKind, SigmaConfig
from wholebody_kit.services.keypoint_schema.layout import (
    keypoint_names,
    part_range,
    skeleton,
    SKELETON_EDGE_COUNT,
)
from wholebody_kit.utils import config
from wholebody_kit.utils.exceptions import ConfigError


class SigmaTable(BaseModel):
    """133 positive falloff constants, indexed like the keypoint layout"""
    model_config = ConfigDict(frozen=True)

    sigmas: Tuple[float, ...]

    @field_validator("sigmas")
    @classmethod
    def _check(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(value) != config.NUM_WHOLEBODY_KEYPOINTS:
            raise ValueError(f"expected {config.NUM_WHOLEBODY_KEYPOINTS} sigmas, got {len(value)}")
        if any(not (s > 0) or not np.isfinite(s) for s in value):
            raise ValueError("every sigma must be a finite positive number")
        if tuple(value[: config.NUM_BODY_KEYPOINTS]) != config.COCO_BODY_SIGMAS:
            raise ValueError("body sigmas must equal the COCO constants")
        return value

    @classmethod
    def from_config(cls, sigma_config: Optional[SigmaConfig] = None) -> "SigmaTable":
        sigma_config = sigma_config or SigmaConfig()
        values = list(config.COCO_BODY_SIGMAS)
        values += _expand(sigma_config.foot, len(part_range(PartKind.FOOT)), "foot")
        values += _expand(sigma_config.face, len(part_range(PartKind.FACE)), "face")
        values += _expand(sigma_config.hand, len(part_range(PartKind.LEFT_HAND)), "hand")
        values += _expand(sigma_config.hand, len(part_range(PartKind.RIGHT_HAND)), "hand")
        try:
            return cls(sigmas=tuple(values))
        except ValueError as e:
            raise ConfigError(f"Invalid sigma table: {e}") from e

    def lookup(self, index: int) -> float:
        return self.sigmas[index]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.sigmas, dtype=np.float64)

    def for_part(self, kind: PartKind) -> np.ndarray:
        indices = part_range(kind)
        return self.as_array()[indices.start:indices.stop]


def _expand(value: Any, size: int, name: str) -> list:
    if isinstance(value, (int, float)):
        return [float(value)] * size
    if len(value) != size:
        raise ConfigError(f"{name} sigma list has {len(value)} entries, expected {size}")
    return [float(v) for v in value]


def schema_sidecar(sigmas: Optional[SigmaTable] = None) -> Dict[str, Any]:
    """JSON-serialisable description of the layout, skeleton and sigma table"""
    sigmas = sigmas or SigmaTable.from_config()
    return {
        "num_keypoints": config.NUM_WHOLEBODY_KEYPOINTS,
        "parts": {
            kind.value: [part_range(kind).start, part_range(kind).stop] for kind in PartKind
        },
        "keypoint_names": keypoint_names(),
        "skeleton": [[edge.a, edge.b] for edge in skeleton()],
        "skeleton_edge_count": SKELETON_EDGE_COUNT,
        "sigmas": list(sigmas.sigmas),
    }
