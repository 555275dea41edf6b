"""
Command Line Interface

    python -m wholebody_kit [--config c.json] [--workers N] [--log-level L] <command> ...

Commands: propose, merge, nms, evaluate, validate, stats, render, heatmap, schema.
Diagnostics go to stderr as one JSON line in ErrorResponse form. Exit codes:
0 success, 1 usage, 2 validation failure, 3 I/O.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

from wholebody_kit.models.schemas import (
    WHOLEBODY,
    ErrorResponse,
    EvalParams,
    NmsParams,
    PartKind,
    RenderSpec,
    SigmaConfig,
    ToolConfig,
)
from wholebody_kit.services import coco_io, dataset, evaluation, heatmap, merge, pose_nms, proposal
from wholebody_kit.services.keypoint_schema import SigmaTable, schema_sidecar
from wholebody_kit.utils import config
from wholebody_kit.utils.exceptions import ConfigError, SchemaViolation, WholebodyError

logger = logging.getLogger(__name__)

CATEGORIES = [WHOLEBODY] + [kind.value for kind in PartKind]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors instead of exiting with status 2"""

    def error(self, message: str) -> None:
        raise UsageError(message)


# ============================================================================
# Helpers
# ============================================================================

def _emit(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit_bytes(data: bytes, output: Optional[str]) -> None:
    if output:
        Path(output).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)


def _dump(payload: Any) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def _override(model, **flags):
    """Copy a parameter model with every flag that was given on the command line"""
    given = {name: value for name, value in flags.items() if value is not None}
    if not given:
        return model
    try:
        return model.model_validate({**model.model_dump(), **given})
    except ValidationError as e:
        raise ConfigError(f"Invalid parameter value: {e}") from e


def _load_sigmas(path: Optional[str], tool: ToolConfig) -> SigmaTable:
    if path is None:
        return SigmaTable.from_config(tool.sigmas)
    try:
        sigma_config = SigmaConfig.model_validate_json(Path(path).read_bytes())
    except ValidationError as e:
        raise ConfigError(f"Sigma file {path} is invalid: {e}") from e
    return SigmaTable.from_config(sigma_config)


# ============================================================================
# Commands
# ============================================================================

def cmd_propose(args: argparse.Namespace, tool: ToolConfig, workers: int) -> int:
    params = _override(
        tool.proposal,
        face_expansion=args.face_expansion,
        hand_extension=args.hand_extension,
        hand_scale=args.hand_scale,
    )
    gt = coco_io.load_ground_truth(args.gt)
    proposals = proposal.propose_dataset(gt, params)
    _emit(_dump([p.model_dump(mode="json") for p in proposals]), args.output)
    return config.EXIT_OK


def cmd_merge(args: argparse.Namespace, tool: ToolConfig, workers: int) -> int:
    params = _override(
        tool.merge, iou_threshold=args.iou_threshold, confidence_threshold=args.confidence_threshold
    )
    gt = coco_io.load_ground_truth(args.gt)
    parts = {
        kind: coco_io.load_detections(path, kind) if path else None
        for kind, path in (
            (PartKind.FOOT, args.foot),
            (PartKind.FACE, args.face),
            (PartKind.LEFT_HAND, args.lhand),
            (PartKind.RIGHT_HAND, args.rhand),
        )
    }
    merged = merge.merge_dataset(
        gt,
        foot=parts[PartKind.FOOT],
        face=parts[PartKind.FACE],
        lhand=parts[PartKind.LEFT_HAND],
        rhand=parts[PartKind.RIGHT_HAND],
        params=params,
        workers=workers,
    )
    _emit_bytes(coco_io.write_annotations(merged), args.output)
    return config.EXIT_OK


def cmd_nms(args: argparse.Namespace, tool: ToolConfig, workers: int) -> int:
    params: NmsParams = _override(
        tool.nms,
        eta=args.eta,
        sigma_soft=args.sigma_soft,
        score_floor=args.score_floor,
        lambda_=args.lambda_,
    )
    results = coco_io.load_detections(args.input, args.category)
    kept = pose_nms.nms_results(results, params, workers=workers)
    _emit_bytes(coco_io.write_results(kept), args.output)
    return config.EXIT_OK


def cmd_evaluate(args: argparse.Namespace, tool: ToolConfig, workers: int) -> int:
    params: EvalParams = _override(tool.evaluation, max_dets=args.max_dets)
    sigmas = _load_sigmas(args.sigmas, tool)
    gt = coco_io.load_ground_truth(args.gt)
    results = coco_io.load_detections(args.results, args.category)

    report = evaluation.evaluate(gt, results, sigmas, params, workers=workers)
    per_part = evaluation.per_part_report(gt, results, sigmas, params, workers=workers) if args.per_part else None
    _emit(evaluation.format_report(report, args.format, per_part), args.output)
    return config.EXIT_OK


def cmd_validate(args: argparse.Namespace, tool: ToolConfig, workers: int) -> int:
    if args.results:
        report = coco_io.validate_detections(args.path, args.category)
    else:
        report = coco_io.validate(args.path)
    _emit(_dump(report.model_dump(mode="json")), args.output)
    return config.EXIT_OK if report.ok else config.EXIT_VALIDATION


def cmd_stats(args: argparse.Namespace, tool: ToolConfig, workers: int) -> int:
    summary = dataset.stats(args.path)
    _emit(_dump(summary.model_dump(mode="json")), args.output)
    return config.EXIT_OK


def cmd_render(args: argparse.Namespace, tool: ToolConfig, workers: int) -> int:
    fields: Dict[str, Any] = {"annotation_path": args.gt, "image_id": args.image_id}
    if args.radius is not None:
        fields["keypoint_radius"] = args.radius
    try:
        spec = RenderSpec(**fields)
    except ValidationError as e:
        raise ConfigError(f"Invalid render options: {e}") from e
    _emit_bytes(dataset.render(spec), args.output)
    return config.EXIT_OK


def cmd_heatmap(args: argparse.Namespace, tool: ToolConfig, workers: int) -> int:
    params = _override(tool.heatmap, sigma_px=args.sigma_px)
    gt = coco_io.load_ground_truth(args.gt)
    person = next((p for p in gt.annotations if p.id == args.person_id), None)
    if person is None:
        raise SchemaViolation(f"no annotation with id {args.person_id}", {"person_id": args.person_id})

    stack = heatmap.encode(heatmap.person_input_pose(person), sigma_px=params.sigma_px)
    _emit_bytes(heatmap.dump_stack(stack), args.output)
    return config.EXIT_OK


def cmd_schema(args: argparse.Namespace, tool: ToolConfig, workers: int) -> int:
    _emit(_dump(schema_sidecar(_load_sigmas(args.sigmas, tool))), args.output)
    return config.EXIT_OK


# ============================================================================
# Parser
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wholebody_kit", description="Whole-body (133 keypoint) pose annotation toolkit")
    parser.add_argument("--config", help="JSON tool configuration file")
    parser.add_argument("--workers", type=int, help="worker threads for per-image work")
    parser.add_argument("--log-level", help="logging level (DEBUG, INFO, WARNING, ...)")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("propose", help="face / hand / foot boxes from body keypoints")
    p.add_argument("--gt", required=True)
    p.add_argument("-o", "--output")
    p.add_argument("--face-expansion", type=float)
    p.add_argument("--hand-extension", type=float)
    p.add_argument("--hand-scale", type=float)
    p.set_defaults(handler=cmd_propose)

    p = sub.add_parser("merge", help="attach part detections to body ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--foot")
    p.add_argument("--face")
    p.add_argument("--lhand")
    p.add_argument("--rhand")
    p.add_argument("-o", "--output")
    p.add_argument("--iou-threshold", type=float)
    p.add_argument("--confidence-threshold", type=float)
    p.set_defaults(handler=cmd_merge)

    p = sub.add_parser("nms", help="parametric pose NMS over a results file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", "-o", dest="output")
    p.add_argument("--category", choices=CATEGORIES, default=WHOLEBODY)
    p.add_argument("--eta", type=float)
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--sigma-soft", type=float)
    p.add_argument("--score-floor", type=float)
    p.set_defaults(handler=cmd_nms)

    p = sub.add_parser("evaluate", help="OKS AP / AR of results against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--results", required=True)
    p.add_argument("--category", choices=CATEGORIES, default=WHOLEBODY)
    p.add_argument("--per-part", action="store_true")
    p.add_argument("--sigmas", help="JSON file with foot / face / hand sigmas")
    p.add_argument("--format", choices=evaluation.FORMATS, default="table")
    p.add_argument("--max-dets", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("validate", help="report every violation in a file")
    p.add_argument("path")
    p.add_argument("--results", action="store_true", help="validate a results file instead of ground truth")
    p.add_argument("--category", choices=CATEGORIES, default=WHOLEBODY)
    p.add_argument("-o", "--output")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("stats", help="summary statistics of an annotation file")
    p.add_argument("path")
    p.add_argument("-o", "--output")
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("render", help="SVG skeletons of one image")
    p.add_argument("--gt", required=True)
    p.add_argument("--image-id", type=int, required=True)
    p.add_argument("--radius", type=float)
    p.add_argument("-o", "--output")
    p.set_defaults(handler=cmd_render)

    p = sub.add_parser("heatmap", help="binary heatmap stack of one person")
    p.add_argument("--gt", required=True)
    p.add_argument("--person-id", type=int, required=True)
    p.add_argument("--sigma-px", type=float)
    p.add_argument("-o", "--output")
    p.set_defaults(handler=cmd_heatmap)

    p = sub.add_parser("schema", help="keypoint layout, skeleton and sigma sidecar")
    p.add_argument("--sigmas", help="JSON file with foot / face / hand sigmas")
    p.add_argument("-o", "--output")
    p.set_defaults(handler=cmd_schema)

    return parser


def _diagnose(code: str, message: str, details: Optional[Dict[str, Any]] = None) -> None:
    line = ErrorResponse(message=message, error_code=code, details=details or {}).model_dump()
    sys.stderr.write(json.dumps(line, ensure_ascii=False) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "handler", None) is None:
            raise UsageError("a command is required")
    except UsageError as e:
        _diagnose("USAGE_ERROR", str(e), {"usage": parser.format_usage().strip()})
        return config.EXIT_USAGE

    handler: Callable[..., int] = args.handler
    try:
        settings = config.get_settings()
        config.configure_logging(args.log_level or settings.log_level)
        tool = config.load_tool_config(args.config or settings.config_path)
        workers = args.workers if args.workers is not None else settings.workers
        if workers < 1:
            raise ConfigError(f"workers must be at least 1, got {workers}")
        return handler(args, tool, workers)
    except WholebodyError as e:
        logger.debug("Command %s failed: %s", args.command, e.message)
        response = e.to_error_response()
        _diagnose(response["error_code"], response["message"], response["details"])
        return e.exit_code
    except ValidationError as e:
        _diagnose(ConfigError.error_code, f"Invalid settings: {e}")
        return config.EXIT_VALIDATION
    except OSError as e:
        _diagnose("IO_ERROR", str(e), {"path": getattr(e, "filename", None)})
        return config.EXIT_IO


def run(argv: Optional[List[str]] = None) -> None:
    sys.exit(main(argv))
