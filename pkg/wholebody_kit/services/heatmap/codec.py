"""
Gaussian Heatmap Codec

Keypoints in a 256x192 input frame are encoded as one unnormalized Gaussian
plane per keypoint on the 64x48 output grid (stride 4), and decoded back by
argmax with a quarter-pixel shift toward the higher neighbour.

Binary stack layout (little endian):
    magic   4 bytes  b"WBHM"
    version uint16
    planes  uint16   K
    height  uint16   H
    width   uint16   W
    stride  uint16
    data    float32  K * H * W values, row-major, plane after plane
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from wholebody_kit.models.schemas import Box, FullBodyPose, PersonAnnotation
from wholebody_kit.utils import config
from wholebody_kit.utils.exceptions import OutOfBounds, SchemaViolation

logger = logging.getLogger(__name__)

STACK_MAGIC = b"WBHM"
STACK_VERSION = 1
_HEADER_FIELDS = 5
_HEADER_SIZE = len(STACK_MAGIC) + 2 * _HEADER_FIELDS


@dataclass(eq=False)
class HeatmapStack:
    """Heatmaps of one pose, shape (K, H, W), values in [0, 1]"""
    maps: np.ndarray
    stride: int = config.HEATMAP_STRIDE

    @property
    def num_planes(self) -> int:
        return int(self.maps.shape[0])

    @property
    def size(self) -> Tuple[int, int]:
        """(height, width) of every plane"""
        return int(self.maps.shape[1]), int(self.maps.shape[2])


# ============================================================================
# Encoding / Decoding
# ============================================================================

def encode(pose: FullBodyPose, input_size: Tuple[int, int] = config.INPUT_SIZE,
           sigma_px: float = config.HEATMAP_SIGMA) -> HeatmapStack:
    """
    Encode a pose given in input-frame pixels.

    Args:
        pose: keypoints with x in [0, width) and y in [0, height) of the input frame
        input_size: (height, width) of the input frame
        sigma_px: Gaussian standard deviation in heatmap pixels

    Returns:
        HeatmapStack with one plane per keypoint; unlabeled keypoints give zero planes

    Raises:
        OutOfBounds: a labeled keypoint lies outside the input frame
    """
    in_h, in_w = input_size
    stride = config.HEATMAP_STRIDE
    out_h, out_w = in_h // stride, in_w // stride

    kps = pose.as_array()
    labeled = kps[:, 2] > 0
    for k in np.flatnonzero(labeled):
        x, y = kps[k, 0], kps[k, 1]
        if not (0 <= x < in_w and 0 <= y < in_h):
            raise OutOfBounds(int(k), float(x), float(y))

    mu_x = kps[:, 0] / stride
    mu_y = kps[:, 1] / stride
    xx = np.arange(out_w, dtype=np.float64)[None, None, :]
    yy = np.arange(out_h, dtype=np.float64)[None, :, None]
    d2 = (xx - mu_x[:, None, None]) ** 2 + (yy - mu_y[:, None, None]) ** 2
    maps = np.exp(-d2 / (2.0 * sigma_px ** 2))
    maps[~labeled] = 0.0
    return HeatmapStack(maps=maps.astype(np.float32), stride=stride)


def _refine(plane: np.ndarray, px: int, py: int) -> Tuple[float, float]:
    # shift a quarter pixel toward the larger neighbour on each axis
    h, w = plane.shape
    x, y = float(px), float(py)
    if 0 < px < w - 1:
        x += 0.25 * np.sign(plane[py, px + 1] - plane[py, px - 1])
    if 0 < py < h - 1:
        y += 0.25 * np.sign(plane[py + 1, px] - plane[py - 1, px])
    return x, y


def decode(stack: HeatmapStack) -> FullBodyPose:
    """
    Decode a stack back to input-frame keypoints.

    The third value of each triple is the plane's peak value (0 for an
    all-zero plane, which decodes to (0, 0, 0)); the pose score is the mean
    peak over non-empty planes.
    """
    maps = np.asarray(stack.maps, dtype=np.float64)
    k, h, w = maps.shape
    flat = maps.reshape(k, -1)
    peaks = flat.max(axis=1)
    indices = flat.argmax(axis=1)

    keypoints = np.zeros((k, 3), dtype=np.float64)
    for j in range(k):
        if peaks[j] <= 0:
            continue
        py, px = divmod(int(indices[j]), w)
        x, y = _refine(maps[j], px, py)
        keypoints[j] = (x * stack.stride, y * stack.stride, peaks[j])

    present = peaks > 0
    score = float(peaks[present].mean()) if present.any() else 0.0
    return FullBodyPose.from_array(keypoints, score=min(score, 1.0))


# ============================================================================
# Crop Transform
# ============================================================================

def crop_box(box: Box, input_size: Tuple[int, int] = config.INPUT_SIZE,
             padding: float = config.CROP_PADDING) -> Box:
    """Pad a person box and widen it to the input aspect ratio around its center"""
    in_h, in_w = input_size
    aspect = in_w / in_h
    w, h = box.w, box.h
    if w > aspect * h:
        h = w / aspect
    else:
        w = h * aspect
    cx, cy = box.center
    w, h = w * padding, h * padding
    return Box(x=cx - w / 2.0, y=cy - h / 2.0, w=w, h=h)


def to_input_frame(keypoints: np.ndarray, box: Box, input_size: Tuple[int, int] = config.INPUT_SIZE,
                   padding: float = config.CROP_PADDING) -> np.ndarray:
    """
    Map image-pixel keypoints of shape (K, 3) into the input frame of the
    padded crop around ``box``. Keypoints landing outside the frame become
    (0, 0, 0).
    """
    in_h, in_w = input_size
    crop = crop_box(box, input_size, padding)
    if crop.w <= 0 or crop.h <= 0:
        return np.zeros_like(np.asarray(keypoints, dtype=np.float64))

    kps = np.asarray(keypoints, dtype=np.float64).copy()
    kps[:, 0] = (kps[:, 0] - crop.x) * (in_w / crop.w)
    kps[:, 1] = (kps[:, 1] - crop.y) * (in_h / crop.h)
    outside = (kps[:, 0] < 0) | (kps[:, 0] >= in_w) | (kps[:, 1] < 0) | (kps[:, 1] >= in_h)
    kps[outside | (kps[:, 2] <= 0)] = 0.0
    return kps


def from_input_frame(keypoints: np.ndarray, box: Box, input_size: Tuple[int, int] = config.INPUT_SIZE,
                     padding: float = config.CROP_PADDING) -> np.ndarray:
    """Inverse of to_input_frame for labeled keypoints"""
    in_h, in_w = input_size
    crop = crop_box(box, input_size, padding)
    kps = np.asarray(keypoints, dtype=np.float64).copy()
    labeled = kps[:, 2] > 0
    kps[labeled, 0] = kps[labeled, 0] * (crop.w / in_w) + crop.x
    kps[labeled, 1] = kps[labeled, 1] * (crop.h / in_h) + crop.y
    return kps


def person_box(person: PersonAnnotation) -> Optional[Box]:
    """The annotation's bbox, else the tight box of its labeled keypoints"""
    if person.bbox is not None and person.bbox.area > 0:
        return person.bbox
    kps = person.as_array()
    labeled = kps[kps[:, 2] > 0, :2]
    if len(labeled) == 0:
        return None
    x1, y1 = labeled.min(axis=0)
    x2, y2 = labeled.max(axis=0)
    return Box.from_xyxy(float(x1), float(y1), float(x2), float(y2))


def person_input_pose(person: PersonAnnotation, input_size: Tuple[int, int] = config.INPUT_SIZE,
                      padding: float = config.CROP_PADDING) -> FullBodyPose:
    """A ground-truth person in input-frame coordinates, ready for encode()"""
    box = person_box(person)
    kps = person.as_array()
    if box is None:
        kps = np.zeros_like(kps)
    else:
        kps = to_input_frame(kps, box, input_size, padding)
    return FullBodyPose.from_array(kps, person_id=person.id, image_id=person.image_id)


# ============================================================================
# Binary Dump
# ============================================================================

def dump_stack(stack: HeatmapStack, path: Optional[Union[str, Path]] = None) -> bytes:
    """Serialize a stack (and write it when a path is given)"""
    k, h, w = stack.maps.shape
    header = STACK_MAGIC + np.array([STACK_VERSION, k, h, w, stack.stride], dtype="<u2").tobytes()
    data = header + np.ascontiguousarray(stack.maps, dtype="<f4").tobytes()
    if path is not None:
        Path(path).write_bytes(data)
        logger.info("Wrote %d heatmap plane(s) of %dx%d to %s", k, h, w, path)
    return data


def load_stack(data: Union[bytes, str, Path]) -> HeatmapStack:
    """
    Read a stack written by dump_stack.

    Raises:
        SchemaViolation: bad magic, unknown version or truncated data
    """
    if not isinstance(data, (bytes, bytearray)):
        data = Path(data).read_bytes()
    if len(data) < _HEADER_SIZE or data[: len(STACK_MAGIC)] != STACK_MAGIC:
        raise SchemaViolation("not a heatmap stack (bad magic)")

    version, k, h, w, stride = (int(v) for v in np.frombuffer(data, dtype="<u2", count=_HEADER_FIELDS,
                                                              offset=len(STACK_MAGIC)))
    if version != STACK_VERSION:
        raise SchemaViolation(f"unsupported heatmap stack version {version}")
    expected = _HEADER_SIZE + 4 * k * h * w
    if len(data) != expected:
        raise SchemaViolation(f"heatmap stack has {len(data)} bytes, expected {expected}")

    maps = np.frombuffer(data, dtype="<f4", offset=_HEADER_SIZE).reshape(k, h, w).astype(np.float32)
    return HeatmapStack(maps=maps, stride=stride)
