"""
Whole-Body Keypoint Layout

133 keypoints in the order body, foot, face, left hand, right hand:

    Body        [0, 17)     COCO person keypoints
    Foot        [17, 23)    left big toe, small toe, heel, then right
    Face        [23, 91)    68-landmark convention (jaw 0-16, brows, nose, eyes, lips)
    LeftHand    [91, 112)   21 joints: wrist, then thumb/index/middle/ring/pinky, 4 each
    RightHand   [112, 133)  same order as the left hand

The skeleton has SKELETON_EDGE_COUNT = 130 edges: 19 body, 6 foot (ankle to
toes and heel), 63 face, 20 per hand and 2 wrist links (body wrist to hand root).
"""

from typing import Dict, List, NamedTuple, Tuple

from wholebody_kit.models.schemas import PartKind
from wholebody_kit.utils import config

_PART_SIZES: Tuple[Tuple[PartKind, int], ...] = (
    (PartKind.BODY, config.NUM_BODY_KEYPOINTS),
    (PartKind.FOOT, config.NUM_FOOT_KEYPOINTS),
    (PartKind.FACE, config.NUM_FACE_KEYPOINTS),
    (PartKind.LEFT_HAND, config.NUM_HAND_KEYPOINTS),
    (PartKind.RIGHT_HAND, config.NUM_HAND_KEYPOINTS),
)


def _build_ranges() -> Dict[PartKind, range]:
    ranges = {}
    start = 0
    for kind, size in _PART_SIZES:
        ranges[kind] = range(start, start + size)
        start += size
    return ranges


_PART_RANGES = _build_ranges()

BODY_KEYPOINT_NAMES = (
    "nose", "left_eye", "right_eye", "left_ear", "right_ear",
    "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
    "left_wrist", "right_wrist", "left_hip", "right_hip",
    "left_knee", "right_knee", "left_ankle", "right_ankle",
)
FOOT_KEYPOINT_NAMES = (
    "left_big_toe", "left_small_toe", "left_heel",
    "right_big_toe", "right_small_toe", "right_heel",
)
HAND_JOINT_NAMES = ("root",) + tuple(
    f"{finger}{joint}"
    for finger in ("thumb", "forefinger", "middle_finger", "ring_finger", "pinky_finger")
    for joint in range(1, 5)
)


class SkeletonEdge(NamedTuple):
    a: int
    b: int


# Body indices used by the proposal heuristics
NOSE, LEFT_EYE, RIGHT_EYE, LEFT_EAR, RIGHT_EAR = 0, 1, 2, 3, 4
LEFT_ELBOW, RIGHT_ELBOW, LEFT_WRIST, RIGHT_WRIST = 7, 8, 9, 10
LEFT_KNEE, RIGHT_KNEE, LEFT_ANKLE, RIGHT_ANKLE = 13, 14, 15, 16
HEAD_INDICES = (NOSE, LEFT_EYE, RIGHT_EYE, LEFT_EAR, RIGHT_EAR)

# 0-based COCO body skeleton
_BODY_EDGES = (
    (15, 13), (13, 11), (16, 14), (14, 12), (11, 12), (5, 11), (6, 12),
    (5, 6), (5, 7), (6, 8), (7, 9), (8, 10), (1, 2), (0, 1), (0, 2),
    (1, 3), (2, 4), (3, 5), (4, 6),
)


def part_range(kind: PartKind) -> range:
    """Half-open index range of a part within the 133-keypoint layout"""
    return _PART_RANGES[PartKind(kind)]


def total_keypoints() -> int:
    return sum(len(r) for r in _PART_RANGES.values())


def part_of(index: int) -> PartKind:
    for kind, indices in _PART_RANGES.items():
        if index in indices:
            return kind
    raise IndexError(f"keypoint index {index} outside [0, {config.NUM_WHOLEBODY_KEYPOINTS})")


def keypoint_names() -> List[str]:
    names = list(BODY_KEYPOINT_NAMES) + list(FOOT_KEYPOINT_NAMES)
    names += [f"face-{i}" for i in range(config.NUM_FACE_KEYPOINTS)]
    names += [f"left_hand_{joint}" for joint in HAND_JOINT_NAMES]
    names += [f"right_hand_{joint}" for joint in HAND_JOINT_NAMES]
    return names


def _chain(offset: int, start: int, stop: int, closed: bool = False) -> List[Tuple[int, int]]:
    edges = [(offset + i, offset + i + 1) for i in range(start, stop - 1)]
    if closed:
        edges.append((offset + stop - 1, offset + start))
    return edges


def _face_edges() -> List[Tuple[int, int]]:
    base = part_range(PartKind.FACE).start
    edges = []
    edges += _chain(base, 0, 17)                 # jaw line
    edges += _chain(base, 17, 22)                # right brow
    edges += _chain(base, 22, 27)                # left brow
    edges += _chain(base, 27, 31)                # nose bridge
    edges += _chain(base, 31, 36)                # nostrils
    edges += _chain(base, 36, 42, closed=True)   # right eye
    edges += _chain(base, 42, 48, closed=True)   # left eye
    edges += _chain(base, 48, 60, closed=True)   # outer lip
    edges += _chain(base, 60, 68, closed=True)   # inner lip
    return edges


def _hand_edges(kind: PartKind) -> List[Tuple[int, int]]:
    base = part_range(kind).start
    edges = []
    for finger in range(5):
        root = 1 + 4 * finger
        edges.append((base, base + root))
        edges += [(base + root + j, base + root + j + 1) for j in range(3)]
    return edges


def _build_skeleton() -> Tuple[Tuple[int, int], ...]:
    foot = part_range(PartKind.FOOT).start
    edges: List[Tuple[int, int]] = list(_BODY_EDGES)
    edges += [(LEFT_ANKLE, foot + i) for i in range(3)]
    edges += [(RIGHT_ANKLE, foot + 3 + i) for i in range(3)]
    edges += _face_edges()
    edges += _hand_edges(PartKind.LEFT_HAND)
    edges += _hand_edges(PartKind.RIGHT_HAND)
    edges.append((LEFT_WRIST, part_range(PartKind.LEFT_HAND).start))
    edges.append((RIGHT_WRIST, part_range(PartKind.RIGHT_HAND).start))
    return tuple(edges)


_SKELETON = tuple(SkeletonEdge(a, b) for a, b in _build_skeleton())
SKELETON_EDGE_COUNT = 130


def skeleton() -> List[SkeletonEdge]:
    """Fixed edge list over the 133-keypoint layout"""
    return list(_SKELETON)


def body_skeleton() -> List[Tuple[int, int]]:
    return list(_BODY_EDGES)
