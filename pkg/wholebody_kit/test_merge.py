#!/usr/bin/env python3
"""
Test Suite for Whole-Body Pseudo-Label Merging
Tests per-person fusion, part association and dataset merging
"""

import json
import unittest

from wholebody_kit.models.schemas import (
    Box,
    DetectionRecord,
    MergeParams,
    PartKind,
    PersonProposal,
)
from wholebody_kit.services.coco_io import (
    parse_detections,
    parse_ground_truth,
    validate_document,
    write_annotations,
)
from wholebody_kit.services.merge import (
    assign_parts,
    detection_box,
    merge_dataset,
    merge_person,
)
from wholebody_kit.synthetic import body_ground_truth, part_detection, part_keypoints
from wholebody_kit.utils.exceptions import PartLengthMismatch, SchemaViolation

FACE_BOX_P1 = Box(x=134, y=102, w=32, h=32)
LEFT_HAND_BOX_P3 = Box(x=66, y=112, w=48, h=48)
FOOT_BOX_P2 = Box(x=418, y=340, w=64, h=40)


def _ground_truth():
    return parse_ground_truth(json.dumps(body_ground_truth()))


def _record(kind: PartKind, box: Box, **fields) -> DetectionRecord:
    return DetectionRecord.model_validate({**part_detection(kind, box, image_id=1, **fields), "category": kind})


def _triples(kind: PartKind, box: Box):
    values = []
    kps = part_keypoints(kind, box)
    for i in range(0, len(kps), 3):
        values.extend((float(kps[i]), float(kps[i + 1]), 1))
    return values


class TestMergePerson(unittest.TestCase):
    """Fusion of one body annotation with its parts"""

    def setUp(self):
        self.person = _ground_truth().annotations[0]

    def test_all_parts_absent(self):
        pose = merge_person(self.person)
        self.assertEqual(pose.keypoint_count, 133)
        self.assertEqual(pose.keypoints[:51], list(self.person.keypoints))
        self.assertEqual(pose.keypoints[51:], [0, 0, 0] * 116)
        self.assertEqual((pose.person_id, pose.image_id), (1, 1))

    def test_all_parts_present(self):
        box = Box(x=10, y=10, w=40, h=40)
        pose = merge_person(
            self.person,
            foot=_record(PartKind.FOOT, box),
            face=_record(PartKind.FACE, box),
            lhand=_record(PartKind.LEFT_HAND, box),
            rhand=_record(PartKind.RIGHT_HAND, box),
        )
        self.assertEqual(len(pose.keypoints), 399)
        self.assertTrue(all(v == 1 for v in pose.keypoints[51 + 2::3]))
        self.assertEqual(pose.keypoints[3 * 23: 3 * 91], _triples(PartKind.FACE, box))
        self.assertEqual(pose.keypoints[3 * 112:], _triples(PartKind.RIGHT_HAND, box))

    def test_body_slots_untouched(self):
        box = Box(x=0, y=0, w=5, h=5)
        pose = merge_person(self.person, face=_record(PartKind.FACE, box))
        self.assertEqual(pose.keypoints[:51], list(self.person.keypoints))

    def test_wrong_part_length(self):
        hand = _record(PartKind.LEFT_HAND, Box(x=0, y=0, w=5, h=5))
        with self.assertRaises(PartLengthMismatch) as ctx:
            merge_person(self.person, face=hand)
        self.assertEqual((ctx.exception.got, ctx.exception.expected), (21, 68))

    def test_low_confidence_keypoints_zeroed(self):
        kps = [10.0, 20.0, 0.04] + [30.0, 40.0, 0.5] * 5
        foot = DetectionRecord(image_id=1, keypoints=kps, score=0.9, category=PartKind.FOOT)
        pose = merge_person(self.person, foot=foot)
        self.assertEqual(pose.keypoints[51:54], [0, 0, 0])
        self.assertEqual(pose.keypoints[54:57], [30.0, 40.0, 1])

    def test_custom_confidence_threshold(self):
        kps = [10.0, 20.0, 0.4] * 6
        foot = DetectionRecord(image_id=1, keypoints=kps, score=0.9, category=PartKind.FOOT)
        self.assertEqual(merge_person(self.person, foot=foot, confidence_threshold=0.5).keypoints[51:69], [0, 0, 0] * 6)


class TestAssignment(unittest.TestCase):
    """Greedy IoU association"""

    def setUp(self):
        gt = _ground_truth()
        self.persons = [p for p in gt.annotations if p.image_id == 1]

    def _proposals(self, box_a: Box, box_b: Box):
        return {
            1: PersonProposal(image_id=1, person_id=1, face_box=box_a),
            2: PersonProposal(image_id=1, person_id=2, face_box=box_b),
        }

    def test_single_match(self):
        face = _record(PartKind.FACE, FACE_BOX_P1, det_id=1)
        assigned = assign_parts(self.persons, [face], PartKind.FACE)
        self.assertEqual(list(assigned), [1])
        self.assertEqual(assigned[1].id, 1)

    def test_below_threshold(self):
        # IoU of a 32 px square shifted by 26 px is 6/58
        far = _record(PartKind.FACE, Box(x=160, y=102, w=32, h=32), det_id=1)
        self.assertEqual(assign_parts(self.persons, [far], PartKind.FACE, iou_threshold=0.3), {})
        self.assertEqual(list(assign_parts(self.persons, [far], PartKind.FACE, iou_threshold=0.1)), [1])

    def test_crossed_overlaps(self):
        proposals = self._proposals(Box(x=0, y=0, w=10, h=10), Box(x=6, y=0, w=10, h=10))
        d1 = _record(PartKind.FACE, Box(x=0, y=0, w=10, h=10), det_id=1, score=0.9)
        d2 = _record(PartKind.FACE, Box(x=4, y=0, w=10, h=10), det_id=2, score=0.8)
        for records in ([d1, d2], [d2, d1]):
            assigned = assign_parts(self.persons, records, PartKind.FACE, proposals=proposals)
            self.assertEqual({pid: rec.id for pid, rec in assigned.items()}, {1: 1, 2: 2})

    def test_each_person_takes_one_detection(self):
        proposals = self._proposals(Box(x=0, y=0, w=10, h=10), Box(x=500, y=500, w=10, h=10))
        d1 = _record(PartKind.FACE, Box(x=0, y=0, w=10, h=10), det_id=1, score=0.9)
        d2 = _record(PartKind.FACE, Box(x=1, y=0, w=10, h=10), det_id=2, score=0.95)
        assigned = assign_parts(self.persons, [d1, d2], PartKind.FACE, proposals=proposals)
        self.assertEqual({pid: rec.id for pid, rec in assigned.items()}, {1: 2})

    def test_score_ties_broken_by_id(self):
        proposals = self._proposals(Box(x=0, y=0, w=10, h=10), Box(x=500, y=500, w=10, h=10))
        d7 = _record(PartKind.FACE, Box(x=0, y=0, w=10, h=10), det_id=7, score=0.5)
        d3 = _record(PartKind.FACE, Box(x=0, y=0, w=10, h=10), det_id=3, score=0.5)
        assigned = assign_parts(self.persons, [d7, d3], PartKind.FACE, proposals=proposals)
        self.assertEqual(assigned[1].id, 3)

    def test_detection_box_from_keypoints(self):
        record = DetectionRecord(
            image_id=1, keypoints=[10.0, 20.0, 0.9, 30.0, 5.0, 0.9, 100.0, 100.0, 0.01], score=0.5,
        )
        self.assertEqual(detection_box(record), Box(x=10, y=5, w=20, h=15))
        unconfident = record.model_copy(update={"keypoints": [1.0, 1.0, 0.0] * 3})
        self.assertIsNone(detection_box(unconfident))


class TestMergeDataset(unittest.TestCase):
    """Whole-dataset pseudo-label construction"""

    def setUp(self):
        self.gt = _ground_truth()
        self.face = [part_detection(PartKind.FACE, FACE_BOX_P1, image_id=1, score=0.8, det_id=11),
                     part_detection(PartKind.FACE, FACE_BOX_P1, image_id=99, score=0.9, det_id=12)]
        self.lhand = [part_detection(PartKind.LEFT_HAND, LEFT_HAND_BOX_P3, image_id=2, score=0.7,
                                     with_bbox=False)]
        self.foot = [part_detection(PartKind.FOOT, FOOT_BOX_P2, image_id=1, score=0.6, confidence=0.01)]

    def _sets(self, reverse: bool = False):
        def load(records, kind):
            records = list(reversed(records)) if reverse else records
            return parse_detections(json.dumps(records), kind)
        return {
            "foot": load(self.foot, PartKind.FOOT),
            "face": load(self.face, PartKind.FACE),
            "lhand": load(self.lhand, PartKind.LEFT_HAND),
        }

    def test_empty_detections(self):
        merged = merge_dataset(self.gt)
        self.assertEqual(len(merged), 3)
        for before, after in zip(self.gt.annotations, merged.annotations):
            self.assertEqual(after.id, before.id)
            self.assertEqual(after.keypoints[:51], before.keypoints)
            self.assertEqual(after.keypoints[51:], [0, 0, 0] * 116)
            self.assertEqual(after.num_keypoints, 17)

    def test_parts_attached_to_the_right_person(self):
        merged = {a.id: a for a in merge_dataset(self.gt, **self._sets()).annotations}

        self.assertEqual(merged[1].keypoints[3 * 23: 3 * 91], _triples(PartKind.FACE, FACE_BOX_P1))
        self.assertEqual(merged[1].num_keypoints, 17 + 68)
        self.assertEqual(merged[2].keypoints[3 * 23: 3 * 91], [0, 0, 0] * 68)
        self.assertEqual(merged[3].keypoints[3 * 91: 3 * 112], _triples(PartKind.LEFT_HAND, LEFT_HAND_BOX_P3))
        self.assertEqual(merged[3].num_keypoints, 17 + 21)
        # foot detection assigned to person 2 but every keypoint is below the confidence threshold
        self.assertEqual(merged[2].keypoints[3 * 17: 3 * 23], [0, 0, 0] * 6)
        self.assertEqual(merged[2].num_keypoints, 17)

    def test_extra_fields_and_order_kept(self):
        merged = merge_dataset(self.gt, **self._sets())
        self.assertEqual([a.id for a in merged.annotations], [1, 2, 3])
        self.assertEqual(merged.images, self.gt.images)
        self.assertEqual([a.bbox for a in merged.annotations], [a.bbox for a in self.gt.annotations])
        self.assertEqual([a.area for a in merged.annotations], [a.area for a in self.gt.annotations])

    def test_output_reparses_cleanly(self):
        data = write_annotations(merge_dataset(self.gt, **self._sets()))
        report = validate_document(data)
        self.assertEqual(report.errors, [])
        self.assertEqual(report.warnings, [])
        reparsed = parse_ground_truth(data)
        self.assertTrue(all(a.keypoint_count == 133 for a in reparsed.annotations))

    def test_record_order_does_not_matter(self):
        self.assertEqual(
            merge_dataset(self.gt, **self._sets()),
            merge_dataset(self.gt, **self._sets(reverse=True)),
        )

    def test_threaded_matches_sequential(self):
        self.assertEqual(
            merge_dataset(self.gt, **self._sets(), workers=1),
            merge_dataset(self.gt, **self._sets(), workers=2),
        )

    def test_unknown_images_are_skipped(self):
        with self.assertLogs("wholebody_kit.services.merge.fusion", level="WARNING") as logs:
            merge_dataset(self.gt, **self._sets())
        self.assertTrue(any("unknown image" in line for line in logs.output))

    def test_duplicate_person_ids_rejected(self):
        # built directly, bypassing the parser's id check
        twin = self.gt.annotations[2].model_copy(update={"id": self.gt.annotations[0].id})
        gt = self.gt.model_copy(update={"annotations": [self.gt.annotations[0], twin]})
        with self.assertRaises(SchemaViolation):
            merge_dataset(gt, **self._sets())

    def test_strict_threshold_leaves_parts_off(self):
        merged = merge_dataset(self.gt, **self._sets(), params=MergeParams(iou_threshold=1.0))
        # exact-box face detection still reaches IoU 1
        self.assertEqual(merged.annotations[0].num_keypoints, 17 + 68)
        self.assertEqual(merged.annotations[2].num_keypoints, 17)


if __name__ == "__main__":
    unittest.main(verbosity=2)
