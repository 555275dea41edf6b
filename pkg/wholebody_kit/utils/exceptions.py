"""
Error hierarchy shared by the library, the CLI and the HTTP service.

Every error carries an ``error_code`` (machine-readable, used in the
ErrorResponse body and in CLI diagnostics) and an ``exit_code`` for the CLI.
"""

from typing import Any, Dict, Optional, Sequence


class WholebodyError(Exception):
    """Base class for all domain errors"""

    error_code = "WHOLEBODY_ERROR"
    exit_code = 2

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_error_response(self) -> Dict[str, Any]:
        # schemas imports config, which imports this module
        from wholebody_kit.models.schemas import ErrorResponse

        return ErrorResponse(message=self.message, error_code=self.error_code, details=self.details).model_dump()


class ConfigError(WholebodyError):
    error_code = "CONFIG_ERROR"


class MalformedJson(WholebodyError):
    error_code = "MALFORMED_JSON"


class SchemaViolation(WholebodyError):
    error_code = "SCHEMA_VIOLATION"


class WrongKeypointCount(WholebodyError):
    error_code = "WRONG_KEYPOINT_COUNT"

    def __init__(self, got: int, expected: Sequence[int], where: str = ""):
        self.got = got
        self.expected = tuple(expected)
        suffix = f" ({where})" if where else ""
        super().__init__(
            f"keypoints array has length {got}, expected one of {list(self.expected)}{suffix}",
            {"got": got, "expected": list(self.expected)},
        )


class BadVisibility(WholebodyError):
    error_code = "BAD_VISIBILITY"

    def __init__(self, v: Any, where: str = ""):
        self.v = v
        suffix = f" ({where})" if where else ""
        super().__init__(f"visibility flag {v!r} is not one of 0, 1, 2{suffix}", {"v": v})


class DanglingImageRef(WholebodyError):
    error_code = "DANGLING_IMAGE_REF"

    def __init__(self, image_id: Any):
        self.image_id = image_id
        super().__init__(f"image_id {image_id!r} does not reference a known image", {"image_id": image_id})


class BadScore(WholebodyError):
    error_code = "BAD_SCORE"

    def __init__(self, score: Any, where: str = ""):
        self.score = score
        suffix = f" ({where})" if where else ""
        super().__init__(f"score {score!r} is not a finite value in [0, 1]{suffix}", {"score": repr(score)})


class PartLengthMismatch(WholebodyError):
    error_code = "PART_LENGTH_MISMATCH"

    def __init__(self, kind: Any, got: int, expected: int):
        self.kind = kind
        self.got = got
        self.expected = expected
        super().__init__(
            f"{kind} record has {got} keypoints, expected {expected}",
            {"kind": str(kind), "got": got, "expected": expected},
        )


class OutOfBounds(WholebodyError):
    error_code = "OUT_OF_BOUNDS"

    def __init__(self, index: int, x: float, y: float):
        self.index = index
        super().__init__(
            f"keypoint {index} at ({x}, {y}) lies outside the input frame",
            {"index": index, "x": x, "y": y},
        )


class UnknownImageId(WholebodyError):
    error_code = "UNKNOWN_IMAGE_ID"

    def __init__(self, image_id: Any):
        self.image_id = image_id
        super().__init__(f"image id {image_id!r} is not present in the annotation file", {"image_id": image_id})
