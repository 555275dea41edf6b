#!/usr/bin/env python3
"""
Test Suite for Dataset Tools
Tests summary statistics and skeleton rendering
"""

import json
import tempfile
import unittest
from pathlib import Path

import numpy as np

from wholebody_kit.models.schemas import PartKind, RenderSpec
from wholebody_kit.services.coco_io import parse_ground_truth
from wholebody_kit.services.dataset import dataset_stats, plan_render, render, render_set, stats
from wholebody_kit.services.keypoint_schema import body_skeleton
from wholebody_kit.synthetic import body_ground_truth, body_keypoints, person, wholebody_keypoints
from wholebody_kit.utils.exceptions import MalformedJson, UnknownImageId

FIXTURES = Path(__file__).parent / "fixtures"


def _wholebody_document():
    document = body_ground_truth()
    rng = np.random.default_rng(8)
    document["annotations"] = [person(1, 1, 100, 100, wholebody_keypoints(100, 100, rng))]
    return document


class TestStats(unittest.TestCase):
    """Dataset summary statistics"""

    def test_body_fixture(self):
        summary = stats(FIXTURES / "body_gt.json")
        self.assertEqual(summary.images, 2)
        self.assertEqual(summary.persons, 3)
        # image 1 holds two persons, image 2 one
        self.assertEqual(summary.persons_per_image, {1: 1, 2: 1})
        self.assertEqual(summary.labeled_rate[PartKind.BODY.value], 1.0)
        self.assertEqual(summary.labeled_rate[PartKind.FACE.value], 0.0)
        self.assertEqual((summary.area.small, summary.area.medium, summary.area.large), (0, 0, 3))
        self.assertEqual(summary.area.median, 12900.0)

    def test_empty_image_counted(self):
        document = body_ground_truth()
        document["images"].append({"id": 3, "width": 100, "height": 100})
        summary = dataset_stats(parse_ground_truth(json.dumps(document)))
        self.assertEqual(summary.persons_per_image, {0: 1, 1: 1, 2: 1})

    def test_partial_labels(self):
        kps = body_keypoints(0, 0)
        for k in range(5):
            kps[3 * k + 2] = 0
        document = body_ground_truth()
        document["annotations"] = [person(1, 1, 0, 0, kps)]
        summary = dataset_stats(parse_ground_truth(json.dumps(document)))
        self.assertAlmostEqual(summary.labeled_rate[PartKind.BODY.value], 12 / 17)

    def test_wholebody_rates(self):
        summary = dataset_stats(parse_ground_truth(json.dumps(_wholebody_document())))
        self.assertTrue(all(rate == 1.0 for rate in summary.labeled_rate.values()))

    def test_area_bucket_edges(self):
        document = body_ground_truth()
        areas = [32.0 ** 2, 50.0 ** 2, 96.0 ** 2, 100.0 ** 2]
        document["annotations"] = [person(i + 1, 1, 0, 0) for i in range(len(areas))]
        for ann, area in zip(document["annotations"], areas):
            ann["area"] = area
        summary = dataset_stats(parse_ground_truth(json.dumps(document)))
        # an area of exactly 96^2 is neither medium nor large
        self.assertEqual((summary.area.small, summary.area.medium, summary.area.large), (1, 1, 1))

    def test_no_persons(self):
        document = body_ground_truth()
        document["annotations"] = []
        summary = dataset_stats(parse_ground_truth(json.dumps(document)))
        self.assertEqual(summary.persons, 0)
        self.assertIsNone(summary.area.median)

    def test_parse_errors_propagate(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "broken.json"
            path.write_bytes(b"{not json")
            with self.assertRaises(MalformedJson):
                stats(path)


class TestRender(unittest.TestCase):
    """Skeleton render plans and SVG output"""

    def test_body_plan(self):
        gt = parse_ground_truth(json.dumps(body_ground_truth()))
        plan = plan_render(gt, 2)
        self.assertEqual((plan.width, plan.height), (320, 240))
        self.assertEqual(len(plan.markers), 17)
        self.assertEqual(len(plan.segments), len(body_skeleton()))
        self.assertEqual(len(plan_render(gt, 1).markers), 34)

    def test_wholebody_plan(self):
        plan = plan_render(parse_ground_truth(json.dumps(_wholebody_document())), 1)
        self.assertEqual(len(plan.markers), 133)
        self.assertEqual(len(plan.segments), 130)
        self.assertEqual(sum(1 for m in plan.markers if m.part is PartKind.FACE), 68)

    def test_unlabeled_keypoints_are_skipped(self):
        kps = body_keypoints(0, 0)
        kps[2] = 0
        document = body_ground_truth()
        document["annotations"] = [person(1, 1, 0, 0, kps)]
        plan = plan_render(parse_ground_truth(json.dumps(document)), 1)
        self.assertEqual(len(plan.markers), 16)
        nose_edges = sum(1 for a, b in body_skeleton() if 0 in (a, b))
        self.assertEqual(len(plan.segments), len(body_skeleton()) - nose_edges)

    def test_image_without_persons(self):
        document = body_ground_truth()
        document["images"].append({"id": 3, "width": 100, "height": 50})
        plan = plan_render(parse_ground_truth(json.dumps(document)), 3)
        self.assertEqual((plan.markers, plan.segments), ([], []))

    def test_unknown_image(self):
        gt = parse_ground_truth(json.dumps(body_ground_truth()))
        with self.assertRaises(UnknownImageId):
            plan_render(gt, 42)

    def test_svg_is_deterministic(self):
        gt = parse_ground_truth(json.dumps(body_ground_truth()))
        spec = RenderSpec(annotation_path="unused", image_id=1)
        first = render_set(gt, spec)
        self.assertIn(b"<svg", first)
        self.assertEqual(first, render_set(gt, spec))

    def test_render_writes_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            output = Path(tmp) / "skeleton.svg"
            spec = RenderSpec(
                annotation_path=str(FIXTURES / "body_gt.json"), image_id=1, output_path=str(output)
            )
            svg = render(spec)
            self.assertEqual(output.read_bytes(), svg)


if __name__ == "__main__":
    unittest.main(verbosity=2)
