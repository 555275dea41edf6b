#!/usr/bin/env python3
"""
Test Suite for OKS Evaluation
Tests OKS, greedy matching, AP / AR accumulation, per-part reports and formatting
"""

import copy
import csv
import io
import json
import math
import unittest
from pathlib import Path

import numpy as np

from wholebody_kit.models.schemas import (
    DetectionRecord,
    EvalParams,
    EvalReport,
    PartKind,
    PersonAnnotation,
)
from wholebody_kit.services.coco_io import load_ground_truth, parse_detections, parse_ground_truth
from wholebody_kit.services.evaluation import (
    ImageEval,
    evaluate,
    format_report,
    match_image,
    match_prepared,
    oks,
    per_part_report,
)
from wholebody_kit.services.keypoint_schema import SigmaTable, part_range
from wholebody_kit.synthetic import (
    body_ground_truth,
    person,
    random_evaluation_instance,
    wholebody_keypoints,
)
from wholebody_kit.utils import config
from wholebody_kit.utils.exceptions import DanglingImageRef

FIXTURES = Path(__file__).parent / "fixtures"
BODY_SIGMAS = list(config.COCO_BODY_SIGMAS)


def _single_keypoint_gt(area: float = 10000.0) -> PersonAnnotation:
    keypoints = [100.0, 100.0, 2] + [0, 0, 0] * 16
    return PersonAnnotation(id=1, image_id=1, keypoints=keypoints, num_keypoints=1, area=area)


def _shifted_detection(target_oks: float, area: float = 10000.0, det_id: int = 1,
                       score: float = 0.9) -> DetectionRecord:
    """Detection whose single labeled keypoint gives exactly the requested OKS"""
    sigma = BODY_SIGMAS[0]
    d = math.sqrt(-math.log(target_oks) * 2.0 * area * (2.0 * sigma) ** 2)
    keypoints = [100.0 + d, 100.0, 1.0] + [0.0] * 48
    return DetectionRecord(id=det_id, image_id=1, keypoints=keypoints, score=score)


def _results_from_gt(gt_document, score: float = 1.0):
    return [
        {"image_id": ann["image_id"], "keypoints": list(ann["keypoints"]), "score": score}
        for ann in gt_document["annotations"]
    ]


def _image_eval(ious, gt_crowd=None, gt_flagged=None, gt_areas=None, det_areas=None) -> ImageEval:
    ious = np.asarray(ious, dtype=np.float64)
    num_d, num_g = ious.shape
    return ImageEval(
        image_id=1,
        gt_ids=list(range(1, num_g + 1)),
        gt_areas=np.asarray(gt_areas if gt_areas is not None else [5000.0] * num_g, dtype=np.float64),
        gt_crowd=np.asarray(gt_crowd if gt_crowd is not None else [False] * num_g, dtype=bool),
        gt_flagged=np.asarray(gt_flagged if gt_flagged is not None else [False] * num_g, dtype=bool),
        det_ids=np.arange(1, num_d + 1, dtype=np.int64),
        det_scores=np.linspace(0.9, 0.5, num_d),
        det_areas=np.asarray(det_areas if det_areas is not None else [5000.0] * num_d, dtype=np.float64),
        ious=ious,
    )


# ============================================================================
# Reference Evaluator
# ============================================================================

def _reference_oks(det, gt, area, sigmas):
    terms = []
    for k in range(len(gt) // 3):
        if gt[3 * k + 2] <= 0:
            continue
        dx = det[3 * k] - gt[3 * k]
        dy = det[3 * k + 1] - gt[3 * k + 1]
        terms.append(math.exp(-(dx * dx + dy * dy) / (2.0 * area * (2.0 * sigmas[k]) ** 2)))
    return sum(terms) / len(terms) if terms else 0.0


def _reference_box_area(kps):
    xs = [kps[i] for i in range(0, len(kps), 3) if kps[i + 2] > 0]
    ys = [kps[i + 1] for i in range(0, len(kps), 3) if kps[i + 2] > 0]
    return (max(xs) - min(xs)) * (max(ys) - min(ys)) if xs else 0.0


def _reference_curve(gt_document, results, threshold, area_range, max_dets):
    lo, hi = area_range
    outcomes = []   # (score, det id, is true positive)
    num_positive = 0
    for image in gt_document["images"]:
        gts = [a for a in gt_document["annotations"] if a["image_id"] == image["id"]]
        ignored = [
            a.get("iscrowd", 0) == 1 or a["num_keypoints"] == 0 or not lo < a["area"] < hi for a in gts
        ]
        gts = [g for _, g in sorted(zip(ignored, gts), key=lambda pair: pair[0])]
        ignored = sorted(ignored)
        num_positive += ignored.count(False)

        dets = sorted((r for r in results if r["image_id"] == image["id"]), key=lambda r: (-r["score"], r["id"]))
        dets = dets[:max_dets]
        taken = [False] * len(gts)
        for det in dets:
            values = [_reference_oks(det["keypoints"], g["keypoints"], g["area"], BODY_SIGMAS) for g in gts]
            choice = None
            for want_ignored in (False, True):
                candidates = [g for g in range(len(gts)) if ignored[g] == want_ignored and not taken[g]
                              and values[g] >= threshold]
                if candidates:
                    choice = max(candidates, key=lambda g: (values[g], -g))
                    break
            if choice is not None:
                taken[choice] = True
                if ignored[choice]:
                    continue
                outcomes.append((det["score"], det["id"], True))
            else:
                if not lo < _reference_box_area(det["keypoints"]) < hi:
                    continue
                outcomes.append((det["score"], det["id"], False))

    if num_positive == 0:
        return None
    outcomes.sort(key=lambda o: (-o[0], o[1]))
    tp = fp = 0
    precision, recall = [], []
    for _, _, positive in outcomes:
        tp += positive
        fp += not positive
        precision.append(tp / (tp + fp))
        recall.append(tp / num_positive)
    for i in range(len(precision) - 1, 0, -1):
        precision[i - 1] = max(precision[i - 1], precision[i])

    points = []
    for r in np.linspace(0.0, 1.0, config.NUM_RECALL_POINTS):
        index = next((i for i, value in enumerate(recall) if value >= r), None)
        points.append(precision[index] if index is not None else 0.0)
    return sum(points) / len(points), (recall[-1] if recall else 0.0)


def _reference_report(gt_document, results, max_dets=config.MAX_DETECTIONS):
    thresholds = np.linspace(0.5, 0.95, 10)
    values = {}
    for name, suffix in (("all", ""), ("medium", "M"), ("large", "L")):
        curves = [_reference_curve(gt_document, results, t, config.AREA_RANGES[name], max_dets) for t in thresholds]
        if curves[0] is None:
            continue
        ap = [c[0] for c in curves]
        ar = [c[1] for c in curves]
        if suffix:
            values[f"AP{suffix}"] = sum(ap) / len(ap)
            values[f"AR{suffix}"] = sum(ar) / len(ar)
        else:
            values.update(mAP=sum(ap) / len(ap), AP50=ap[0], AP75=ap[5],
                          mAR=sum(ar) / len(ar), AR50=ar[0], AR75=ar[5])
    return EvalReport(**values)


# ============================================================================
# OKS
# ============================================================================

class TestOks(unittest.TestCase):
    """Object keypoint similarity"""

    def test_identical(self):
        gt = _single_keypoint_gt()
        self.assertEqual(oks(np.asarray(gt.keypoints, dtype=float), gt), 1.0)

    def test_far_away(self):
        gt = _single_keypoint_gt()
        det = np.array([[1e9, 1e9, 1.0]] + [[0.0, 0.0, 0.0]] * 16)
        self.assertEqual(oks(det, gt), 0.0)

    def test_exp_minus_one(self):
        gt = _single_keypoint_gt(area=2500.0)
        sigma = BODY_SIGMAS[0]
        d = math.sqrt(2.0 * 2500.0 * (2.0 * sigma) ** 2)
        det = np.array([[100.0, 100.0 + d, 1.0]] + [[0.0, 0.0, 0.0]] * 16)
        self.assertAlmostEqual(oks(det, gt), math.exp(-1.0), places=12)

    def test_unlabeled_gt(self):
        gt = PersonAnnotation(id=1, image_id=1, keypoints=[0] * 51, area=0.0)
        self.assertEqual(oks(np.zeros((17, 3)), gt), 0.0)

    def test_wholebody_detection_on_body_gt(self):
        gt = _single_keypoint_gt()
        det = np.zeros((133, 3))
        det[0] = (100.0, 100.0, 1.0)
        det[50] = (5000.0, 5000.0, 1.0)
        self.assertEqual(oks(det, gt), 1.0)

    def test_custom_sigma_table(self):
        gt = _single_keypoint_gt(area=2500.0)
        det = np.array([[100.0, 110.0, 1.0]] + [[0.0, 0.0, 0.0]] * 16)
        self.assertEqual(oks(det, gt, SigmaTable.from_config()), oks(det, gt))


# ============================================================================
# Matching
# ============================================================================

class TestMatching(unittest.TestCase):
    """Greedy per-image matching"""

    def test_matched_above_threshold(self):
        result = match_image([_shifted_detection(0.9)], [_single_keypoint_gt()], 0.5)
        self.assertEqual(result.det_matches, [1])
        self.assertAlmostEqual(result.det_oks[0], 0.9, places=9)
        self.assertEqual(result.gt_matched, [True])

    def test_unmatched_below_threshold(self):
        result = match_image([_shifted_detection(0.4)], [_single_keypoint_gt()], 0.5)
        self.assertEqual(result.det_matches, [None])
        self.assertAlmostEqual(result.det_oks[0], 0.4, places=9)
        self.assertEqual(result.gt_matched, [False])

    def test_score_order(self):
        low = _shifted_detection(0.95, det_id=1, score=0.3)
        high = _shifted_detection(0.6, det_id=2, score=0.8)
        result = match_image([low, high], [_single_keypoint_gt()], 0.5)
        self.assertEqual(result.det_ids, [2, 1])
        self.assertEqual(result.det_matches, [1, None])

    def test_crossed_matrix(self):
        # det 1 prefers GT 1; det 2 prefers GT 1 too but must fall back to GT 2
        image = _image_eval([[0.8, 0.7], [0.9, 0.6]])
        match = match_prepared(image, [0.5], config.AREA_RANGES["all"])
        self.assertEqual(match.dtm[0].tolist(), [0, 1])
        match = match_prepared(image, [0.65], config.AREA_RANGES["all"])
        self.assertEqual(match.dtm[0].tolist(), [0, -1])

    def test_ties_keep_the_earlier_gt(self):
        image = _image_eval([[0.7, 0.7]])
        match = match_prepared(image, [0.5], config.AREA_RANGES["all"])
        self.assertEqual(match.dtm[0].tolist(), [0])

    def test_ignored_gt_is_last_resort(self):
        image = _image_eval([[0.9, 0.6]], gt_flagged=[True, False])
        match = match_prepared(image, [0.5], config.AREA_RANGES["all"])
        self.assertEqual(match.dtm[0].tolist(), [1])
        self.assertFalse(match.dt_ignore[0, 0])

        match = match_prepared(image, [0.7], config.AREA_RANGES["all"])
        self.assertEqual(match.dtm[0].tolist(), [0])
        self.assertTrue(match.dt_ignore[0, 0])

    def test_crowd_absorbs_several_detections(self):
        image = _image_eval([[0.9], [0.8], [0.7]], gt_crowd=[True], gt_flagged=[True])
        match = match_prepared(image, [0.5], config.AREA_RANGES["all"])
        self.assertEqual(match.dtm[0].tolist(), [0, 0, 0])
        self.assertTrue(match.dt_ignore.all())

    def test_area_range(self):
        image = _image_eval([[0.9], [0.1]], gt_areas=[20000.0], det_areas=[20000.0, 20000.0])
        match = match_prepared(image, [0.5], config.AREA_RANGES["medium"])
        self.assertTrue(match.gt_ignore[0])
        self.assertEqual(match.dt_ignore[0].tolist(), [True, True])

    def test_area_bounds_are_open(self):
        edges = [32.0 ** 2, 96.0 ** 2]
        image = _image_eval([[0.1, 0.1], [0.1, 0.1]], gt_areas=edges, det_areas=edges)
        for name in ("medium", "large"):
            match = match_prepared(image, [0.5], config.AREA_RANGES[name])
            self.assertEqual(match.gt_ignore.tolist(), [True, True], name)
            self.assertEqual(match.dt_ignore[0].tolist(), [True, True], name)
        match = match_prepared(image, [0.5], config.AREA_RANGES["all"])
        self.assertEqual(match.gt_ignore.tolist(), [False, False])


# ============================================================================
# Evaluation
# ============================================================================

class TestEvaluate(unittest.TestCase):
    """AP / AR over datasets"""

    def setUp(self):
        self.document = body_ground_truth()
        self.gt = parse_ground_truth(json.dumps(self.document))

    def test_perfect_results(self):
        results = parse_detections(json.dumps(_results_from_gt(self.document)), "body")
        report = evaluate(self.gt, results)
        for name in ("mAP", "AP50", "AP75", "APL", "mAR", "AR50", "AR75", "ARL"):
            self.assertEqual(getattr(report, name), 1.0, name)
        # every person is larger than 96^2
        self.assertIsNone(report.APM)
        self.assertIsNone(report.ARM)

    def test_perfect_results_from_fixture(self):
        gt = load_ground_truth(FIXTURES / "body_gt.json")
        results = parse_detections(json.dumps(_results_from_gt(self.document, score=0.5)), "body")
        self.assertEqual(evaluate(gt, results).mAP, 1.0)

    def test_empty_results(self):
        report = evaluate(self.gt, parse_detections(b"[]", "body"))
        for name in ("mAP", "AP50", "AP75", "APL", "mAR", "AR50", "AR75", "ARL"):
            self.assertEqual(getattr(report, name), 0.0, name)
        self.assertIsNone(report.APM)

    def test_hand_computed_curve(self):
        document = copy.deepcopy(self.document)
        document["images"] = document["images"][:1]
        document["annotations"] = [a for a in document["annotations"] if a["image_id"] == 1]
        gt = parse_ground_truth(json.dumps(document))
        first, second = (a["keypoints"] for a in document["annotations"])
        stray = [v + 200 if i % 3 == 1 else v for i, v in enumerate(first)]
        results = [
            {"id": 1, "image_id": 1, "keypoints": first, "score": 0.9},
            {"id": 2, "image_id": 1, "keypoints": stray, "score": 0.8},
            {"id": 3, "image_id": 1, "keypoints": second, "score": 0.7},
        ]
        report = evaluate(gt, parse_detections(json.dumps(results), "body"))
        # precision 1, 1/2, 2/3 at recall 1/2, 1/2, 1; envelope 1 up to recall .5, then 2/3
        expected = (51 + 50 * 2.0 / 3.0) / 101
        self.assertAlmostEqual(report.mAP, expected, places=12)
        self.assertAlmostEqual(report.AP50, expected, places=12)
        self.assertEqual(report.mAR, 1.0)

    def test_max_detections_cap(self):
        results = _results_from_gt(self.document)
        results[0]["score"] = 0.1
        results[1]["score"] = 0.2
        results.append({"image_id": 1, "keypoints": [5.0, 5.0, 1.0] * 17, "score": 0.9})
        detections = parse_detections(json.dumps(results), "body")
        capped = evaluate(self.gt, detections, params=EvalParams(max_dets=1))
        self.assertAlmostEqual(capped.mAR, 1.0 / 3.0, places=12)
        self.assertEqual(evaluate(self.gt, detections).mAR, 1.0)

    def test_dangling_result_image(self):
        results = [{"image_id": 77, "keypoints": [0.0] * 51, "score": 0.5}]
        with self.assertRaises(DanglingImageRef):
            evaluate(self.gt, parse_detections(json.dumps(results), "body"))

    def test_matches_reference_evaluator(self):
        rng = np.random.default_rng(12345)
        for trial in range(500):
            document, results = random_evaluation_instance(rng)
            gt = parse_ground_truth(json.dumps(document))
            report = evaluate(gt, parse_detections(json.dumps(results), "body"))
            expected = _reference_report(document, results)
            for name in expected.model_fields:
                got, want = getattr(report, name), getattr(expected, name)
                if want is None:
                    self.assertIsNone(got, (trial, name))
                else:
                    self.assertAlmostEqual(got, want, delta=1e-12, msg=(trial, name))

    def test_scale_invariance(self):
        rng = np.random.default_rng(77)
        scale = 3.0
        for _ in range(50):
            document, results = random_evaluation_instance(rng)
            scaled_document = copy.deepcopy(document)
            for image in scaled_document["images"]:
                image["width"] *= 3
                image["height"] *= 3
            for ann in scaled_document["annotations"]:
                ann["keypoints"] = [v * scale if i % 3 != 2 else v for i, v in enumerate(ann["keypoints"])]
                ann["area"] *= scale ** 2
            scaled_results = copy.deepcopy(results)
            for record in scaled_results:
                record["keypoints"] = [v * scale if i % 3 != 2 else v for i, v in enumerate(record["keypoints"])]

            base = evaluate(parse_ground_truth(json.dumps(document)), parse_detections(json.dumps(results), "body"))
            scaled = evaluate(parse_ground_truth(json.dumps(scaled_document)),
                              parse_detections(json.dumps(scaled_results), "body"))
            # medium / large membership moves with the scale, so compare the all-range metrics
            for name in ("mAP", "AP50", "AP75", "mAR", "AR50", "AR75"):
                a, b = getattr(base, name), getattr(scaled, name)
                if a is None:
                    self.assertIsNone(b)
                else:
                    self.assertAlmostEqual(a, b, places=9)

    def test_deterministic_and_threaded(self):
        rng = np.random.default_rng(5)
        document, results = random_evaluation_instance(rng, max_images=4, max_persons=4, max_dets=6)
        gt = parse_ground_truth(json.dumps(document))
        detections = parse_detections(json.dumps(results), "body")
        self.assertEqual(evaluate(gt, detections), evaluate(gt, detections))
        self.assertEqual(evaluate(gt, detections), evaluate(gt, detections, workers=3))


class TestPerPart(unittest.TestCase):
    """Whole-body and per-part reports"""

    def setUp(self):
        rng = np.random.default_rng(0)
        self.document = body_ground_truth()
        self.document["images"] = self.document["images"][:1]
        self.document["annotations"] = [
            person(1, 1, 100, 100, wholebody_keypoints(100, 100, rng)),
            person(2, 1, 400, 120, wholebody_keypoints(400, 120, rng)),
        ]
        self.gt = parse_ground_truth(json.dumps(self.document))

    def test_perfect_wholebody(self):
        results = parse_detections(json.dumps(_results_from_gt(self.document)))
        self.assertEqual(evaluate(self.gt, results).mAP, 1.0)
        for part, report in per_part_report(self.gt, results).items():
            self.assertEqual(report.mAP, 1.0, part)
            self.assertEqual(report.mAR, 1.0, part)

    def test_garbage_hands(self):
        results = _results_from_gt(self.document)
        hands = range(part_range(PartKind.LEFT_HAND).start, part_range(PartKind.RIGHT_HAND).stop)
        for record in results:
            for k in hands:
                record["keypoints"][3 * k] += 150.0
        reports = per_part_report(self.gt, parse_detections(json.dumps(results)))
        self.assertEqual(reports[PartKind.BODY].mAP, 1.0)
        self.assertEqual(reports[PartKind.FACE].mAP, 1.0)
        self.assertAlmostEqual(reports[PartKind.LEFT_HAND].mAP, 0.0, places=9)
        self.assertAlmostEqual(reports[PartKind.RIGHT_HAND].mAR, 0.0, places=9)

    def test_unlabeled_face_is_undefined(self):
        face = part_range(PartKind.FACE)
        for ann in self.document["annotations"]:
            for k in face:
                ann["keypoints"][3 * k: 3 * k + 3] = [0, 0, 0]
            ann["num_keypoints"] = sum(1 for v in ann["keypoints"][2::3] if v > 0)
        gt = parse_ground_truth(json.dumps(self.document))
        reports = per_part_report(gt, parse_detections(json.dumps(_results_from_gt(self.document))))
        self.assertEqual(reports[PartKind.FACE], EvalReport())
        self.assertEqual(reports[PartKind.FACE].as_machine()["mAP"], -1.0)
        self.assertEqual(reports[PartKind.BODY].mAP, 1.0)

    def test_part_results_evaluate_that_part(self):
        # left-hand-only results scored against the left-hand slots of the GT
        hand = part_range(PartKind.LEFT_HAND)
        results = [
            {"image_id": 1, "keypoints": ann["keypoints"][3 * hand.start: 3 * hand.stop], "score": 0.8}
            for ann in self.document["annotations"]
        ]
        report = evaluate(self.gt, parse_detections(json.dumps(results), PartKind.LEFT_HAND))
        self.assertEqual(report.mAP, 1.0)

    def test_part_results_report_only_their_part(self):
        # body-only GT and face records whose first 17 landmarks sit on the body keypoints
        for ann in self.document["annotations"]:
            ann["keypoints"][3 * 17:] = [0] * (3 * 116)
            ann["num_keypoints"] = 17
        gt = parse_ground_truth(json.dumps(self.document))
        results = [
            {"image_id": 1, "keypoints": ann["keypoints"][:3 * 17] + [1.0, 1.0, 1.0] * 51, "score": 0.8}
            for ann in self.document["annotations"]
        ]
        reports = per_part_report(gt, parse_detections(json.dumps(results), PartKind.FACE))
        self.assertEqual(set(reports), set(PartKind))
        self.assertEqual(reports[PartKind.BODY], EvalReport())
        self.assertEqual(reports[PartKind.FACE], EvalReport())

    def test_part_report_equals_sliced_evaluation(self):
        rng = np.random.default_rng(31)
        results = _results_from_gt(self.document)
        for record in results:
            record["keypoints"] = [v + rng.normal(0, 3.0) if i % 3 != 2 else v
                                   for i, v in enumerate(record["keypoints"])]
        body = range(0, 17)
        sliced_document = copy.deepcopy(self.document)
        for ann in sliced_document["annotations"]:
            ann["keypoints"] = ann["keypoints"][: 3 * body.stop]
            ann["num_keypoints"] = sum(1 for v in ann["keypoints"][2::3] if v > 0)
        sliced_results = [dict(r, keypoints=r["keypoints"][: 3 * body.stop]) for r in results]

        reports = per_part_report(self.gt, parse_detections(json.dumps(results)))
        sliced = evaluate(parse_ground_truth(json.dumps(sliced_document)),
                          parse_detections(json.dumps(sliced_results), "body"))
        self.assertEqual(reports[PartKind.BODY], sliced)


# ============================================================================
# Formatting
# ============================================================================

class TestFormatting(unittest.TestCase):
    """Table / JSON / CSV output"""

    def setUp(self):
        self.report = EvalReport(mAP=0.515, AP50=0.8, AP75=0.5, APL=0.6, mAR=0.6, AR50=0.85, AR75=0.62, ARL=0.7)

    def test_table(self):
        text = format_report(self.report, "table")
        header, row = text.splitlines()
        self.assertEqual(header.split(), list(("mAP", "AP50", "AP75", "APM", "APL",
                                               "mAR", "AR50", "AR75", "ARM", "ARL")))
        self.assertEqual(row.split()[:5], ["wholebody", "51.5", "80.0", "50.0", "—"])

    def test_table_with_parts(self):
        parts = {PartKind.FOOT: EvalReport(mAP=0.25)}
        lines = format_report(self.report, "table", parts).splitlines()
        self.assertEqual(len(lines), 3)
        self.assertTrue(lines[2].startswith("foot"))
        self.assertEqual(lines[2].split()[1], "25.0")

    def test_json(self):
        payload = json.loads(format_report(self.report, "json"))
        self.assertEqual(payload["mAP"], 0.515)
        self.assertEqual(payload["APM"], -1.0)

    def test_json_with_parts(self):
        payload = json.loads(format_report(self.report, "json", {PartKind.BODY: EvalReport()}))
        self.assertEqual(set(payload), {"wholebody", "body"})
        self.assertEqual(payload["body"]["mAP"], -1.0)

    def test_csv(self):
        rows = list(csv.reader(io.StringIO(format_report(self.report, "csv"))))
        self.assertEqual(rows[0][:3], ["part", "mAP", "AP50"])
        self.assertEqual(rows[1][0], "wholebody")
        self.assertEqual(float(rows[1][1]), 0.515)
        self.assertEqual(float(rows[1][4]), -1.0)

    def test_unknown_format(self):
        with self.assertRaises(ValueError):
            format_report(self.report, "xml")


if __name__ == "__main__":
    unittest.main(verbosity=2)
