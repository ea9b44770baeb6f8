from types import SimpleNamespace
from unittest import TestCase

import numpy as np

from liuw.errors import EmptyStream, NoOverlap
from liuw.evaluation import (PositionTrack, checkpoint_times, evaluate,
                             ground_truth_track, nees_envelope, position_nees)
from liuw.records import GroundTruthSample, ImuSample, make_record


def line_track(t, offset=0.0):
    t = np.asarray(t, dtype=float)
    return PositionTrack(t, np.column_stack([t + offset, np.zeros(len(t)),
                                             np.zeros(len(t))]))


class TestPositionTrack(TestCase):

    def test_interpolation(self):
        track = PositionTrack([0.0, 1.0, 3.0], [[0, 0, 0], [1, 2, 0],
                                                [3, 2, 4]])
        np.testing.assert_allclose(track.at([0.5, 2.0, 3.0]),
                                   [[0.5, 1, 0], [2, 2, 2], [3, 2, 4]])

    def test_outside_the_span(self):
        track = line_track([1.0, 2.0])
        self.assertRaises(NoOverlap, track.at, [0.5])
        self.assertRaises(NoOverlap, track.at, [2.5])
        self.assertRaises(NoOverlap, PositionTrack(np.zeros(0),
                                                   np.zeros((0, 3))).at, 1.0)

    def test_validation(self):
        self.assertRaises(ValueError, PositionTrack, [0.0, 1.0], [[0, 0, 0]])
        self.assertRaises(ValueError, PositionTrack, [0.0, 0.0],
                          np.zeros((2, 3)))


class TestEvaluate(TestCase):

    def setUp(self):
        self.gt = line_track(np.linspace(0, 14, 15))

    def test_identical_tracks(self):
        times = checkpoint_times(self.gt, self.gt)
        metrics = evaluate(self.gt, self.gt, times)
        self.assertEqual(metrics, {'TotalErr': 0.0, 'AvgErr': 0.0, 'N': 15,
                                   'final_error': 0.0})

    def test_one_checkpoint_off_by_a_meter(self):
        pos = self.gt.pos.copy()
        pos[7, 1] = 1.0
        est = PositionTrack(self.gt.t, pos)
        metrics = evaluate(est, self.gt, checkpoint_times(est, self.gt))
        self.assertAlmostEqual(metrics['TotalErr'], 1.0)
        self.assertAlmostEqual(metrics['AvgErr'], 1.0 / 15)
        self.assertEqual(metrics['final_error'], 0.0)

    def test_constant_offset(self):
        est = line_track(np.linspace(2, 10, 30), offset=0.5)
        times = checkpoint_times(est, self.gt, 5)
        np.testing.assert_allclose(times, [2, 4, 6, 8, 10])
        metrics = evaluate(est, self.gt, times)
        self.assertAlmostEqual(metrics['AvgErr'], 0.5)
        self.assertAlmostEqual(metrics['final_error'], 0.5)

    def test_no_overlap(self):
        late = line_track([20.0, 21.0])
        self.assertRaises(NoOverlap, checkpoint_times, late, self.gt)
        self.assertRaises(NoOverlap, evaluate, late, self.gt, [5.0])
        self.assertRaises(ValueError, checkpoint_times, self.gt, self.gt, 0)


class TestGroundTruth(TestCase):

    def test_from_records(self):
        samples = [GroundTruthSample(t, [t, 0, 0], [0, 0, 0, 1], [1, 0, 0])
                   for t in (0.0, 0.1, 0.2)]
        records = [make_record(ImuSample(0.0, [0, 0, 0], [0, 0, 9.8]))] + \
            [make_record(s) for s in samples]
        track = ground_truth_track(records)
        np.testing.assert_allclose(track.t, [0.0, 0.1, 0.2])
        np.testing.assert_allclose(ground_truth_track(samples).pos,
                                   track.pos)

    def test_missing(self):
        records = [make_record(ImuSample(0.0, [0, 0, 0], [0, 0, 9.8]))]
        self.assertRaises(EmptyStream, ground_truth_track, records)


class TestConsistency(TestCase):

    def test_envelope(self):
        lo, hi = nees_envelope()
        self.assertAlmostEqual(lo, 0.2158, places=4)
        self.assertAlmostEqual(hi, 9.3484, places=4)
        lo50, hi50 = nees_envelope(runs=50)
        self.assertTrue(lo < lo50 < 3 < hi50 < hi)

    def test_position_nees(self):
        gt = line_track([0.0, 1.0, 2.0])
        result = SimpleNamespace(
            times=np.array([0.5, 1.5, 3.0]),
            positions=np.array([[0.5, 0.2, 0.0], [1.5, 0.0, 0.3],
                                [3.0, 0.0, 0.0]]),
            updates=[SimpleNamespace(pos_cov=np.eye(3) * 0.04),
                     SimpleNamespace(pos_cov=np.diag([1.0, 1.0, 0.09])),
                     SimpleNamespace(pos_cov=np.eye(3))])
        times, nees = position_nees(result, gt)
        np.testing.assert_allclose(times, [0.5, 1.5])
        np.testing.assert_allclose(nees, [1.0, 1.0])
