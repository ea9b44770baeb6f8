from unittest import TestCase

import numpy as np

from liuw.estimation import consts
from liuw.estimation.degradation import (DEGRADATION_HEADER,
                                         DegradationThresholds, analyze)


def pose_covariance(P_rr, P_pp):
    P = np.eye(consts.STATE_DIM) * 1e-6
    P[0:3, 0:3] = P_rr
    P[3:6, 3:6] = P_pp
    return P


class TestAnalyze(TestCase):

    def test_tunnel_axis_is_flagged(self):
        P = pose_covariance(np.eye(3) * 1e-4, np.diag([0.3, 0.01, 0.01]))
        report = analyze(P)
        np.testing.assert_allclose(report.sigma_p, [0.3, 0.01, 0.01])
        np.testing.assert_allclose(report.dir_p, [1, 0, 0], atol=1e-12)
        self.assertTrue(report.degraded_p)
        self.assertFalse(report.degraded_r)
        self.assertTrue(report.degraded)

    def test_well_constrained(self):
        report = analyze(np.eye(consts.STATE_DIM) * 1e-3)
        np.testing.assert_allclose(report.sigma_p, 1e-3)
        np.testing.assert_allclose(report.sigma_r, 1e-3)
        self.assertFalse(report.degraded)

    def test_sigmas_are_sorted(self):
        rng = np.random.default_rng(51)
        A = rng.normal(size=(6, 6)) * 0.1
        P = np.eye(consts.STATE_DIM) * 1e-6
        P[:6, :6] = A @ A.T
        report = analyze(P)
        self.assertTrue(np.all(np.diff(report.sigma_p) <= 0))
        self.assertTrue(np.all(np.diff(report.sigma_r) <= 0))
        np.testing.assert_allclose(report.V_p.T @ report.V_p, np.eye(3),
                                   atol=1e-12)

    def test_coupling_enters_the_blocks(self):
        P = pose_covariance(np.eye(3) * 0.01, np.eye(3) * 0.01)
        P[0, 3] = P[3, 0] = 0.005
        report = analyze(P)
        B = P[:6, :6]
        np.testing.assert_allclose(report.coupling, (B.T @ B)[0:3, 3:6])
        self.assertGreater(report.sigma_p[0], 0.01)

    def test_eigenvector_sign(self):
        v = np.array([-0.8, 0.6, 0.0])
        P = pose_covariance(np.eye(3) * 1e-4,
                            0.2 * np.outer(v, v) + 1e-3 * np.eye(3))
        report = analyze(P)
        np.testing.assert_allclose(report.dir_p, [0.8, -0.6, 0.0],
                                   atol=1e-12)
        self.assertAlmostEqual(report.sigma_p[0], 0.201)

    def test_threshold_is_inclusive(self):
        P = pose_covariance(np.eye(3) * 1e-4, np.diag([0.07, 0.01, 0.01]))
        sigma = analyze(P).sigma_p[0]
        self.assertTrue(analyze(P, DegradationThresholds(sigma, 1.0))
                        .degraded_p)
        self.assertFalse(analyze(P, DegradationThresholds(sigma * 1.0001,
                                                          1.0)).degraded_p)

    def test_rotation_degradation(self):
        P = pose_covariance(np.diag([0.01, 0.01, 0.2]), np.eye(3) * 1e-3)
        report = analyze(P)
        self.assertTrue(report.degraded_r)
        np.testing.assert_allclose(report.dir_r, [0, 0, 1], atol=1e-12)

    def test_row(self):
        P = pose_covariance(np.eye(3) * 1e-4, np.diag([0.3, 0.01, 0.01]))
        row = analyze(P).to_row(12.5)
        self.assertEqual(len(row), len(DEGRADATION_HEADER))
        self.assertEqual(row[0], '12.5')
        self.assertEqual(row[-2:], [1, 0])

    def test_thresholds_must_be_positive(self):
        self.assertRaises(ValueError, DegradationThresholds, d_p_thre=0.0)
