from unittest import TestCase

import numpy as np

from liuw.errors import CoverageGap, GapTooLarge, NonMonotonicTime
from liuw.estimation import consts
from liuw.estimation.manifold import NavState, boxminus, so3_exp
from liuw.estimation.propagation import (ProcessNoiseConfig, propagate,
                                         propagate_state,
                                         propagation_jacobian, undistort_scan)
from liuw.records import ImuSample, LidarScan
from liuw.sim.config import SimConfig
from liuw.sim.synthesize import Synthesizer
from tests.helpers import random_covariance, random_state, \
    numeric_state_jacobian

AT_REST = (0.0, 0.0, consts.STANDARD_GRAVITY)


class TestPropagate(TestCase):

    def test_static_robot_stays_put(self):
        x = NavState.identity()
        P = np.eye(consts.STATE_DIM) * 1e-4
        u = ImuSample(0.0, (0, 0, 0), AT_REST)
        for _ in range(200):
            x, P = propagate(x, P, u, 0.005, ProcessNoiseConfig())

        np.testing.assert_allclose(x.pos_GI, 0, atol=1e-12)
        np.testing.assert_allclose(x.vel_GI, 0, atol=1e-12)
        np.testing.assert_allclose(x.rot_GI.as_rotvec(), 0, atol=1e-12)

    def test_constant_rate_integrates_exactly(self):
        x = NavState.identity()
        P = np.zeros((consts.STATE_DIM, consts.STATE_DIM))
        u = ImuSample(0.0, (0, 0, 0.5), AT_REST)
        for _ in range(100):
            x, P = propagate(x, P, u, 0.01, ProcessNoiseConfig())

        np.testing.assert_allclose(x.rot_GI.as_rotvec(), [0, 0, 0.5],
                                   atol=1e-12)

    def test_free_fall(self):
        x = NavState.identity()
        P = np.zeros((consts.STATE_DIM, consts.STATE_DIM))
        u = ImuSample(0.0, (0, 0, 0), (0, 0, 0))
        x, P = propagate(x, P, u, 0.1, ProcessNoiseConfig())
        np.testing.assert_allclose(x.vel_GI, [0, 0, -0.981])
        np.testing.assert_allclose(x.pos_GI, [0, 0, -0.5 * 9.81 * 0.01])

    def test_time_checks(self):
        x, P = NavState.identity(), np.eye(consts.STATE_DIM)
        u = ImuSample(0.0, (0, 0, 0), AT_REST)
        q = ProcessNoiseConfig()
        self.assertRaises(NonMonotonicTime, propagate, x, P, u, 0.0, q)
        self.assertRaises(NonMonotonicTime, propagate, x, P, u, -0.01, q)
        self.assertRaises(GapTooLarge, propagate, x, P, u, 0.2, q)
        propagate(x, P, u, 0.1, q)

    def test_covariance_stays_symmetric_and_grows(self):
        rng = np.random.default_rng(11)
        x = random_state(rng)
        P = random_covariance(rng)
        u = ImuSample(0.0, rng.normal(size=3), rng.normal(size=3) + AT_REST)
        x2, P2 = propagate(x, P, u, 0.005, ProcessNoiseConfig())
        np.testing.assert_array_equal(P2, P2.T)
        self.assertGreaterEqual(np.linalg.eigvalsh(P2).min(), 0.0)
        self.assertGreater(P2[3, 3] + P2[6, 6], 0.0)

    def test_frozen_blocks_get_no_noise(self):
        x, P = NavState.identity(), np.zeros((consts.STATE_DIM,) * 2)
        u = ImuSample(0.0, (0, 0, 0), AT_REST)
        _, P2 = propagate(x, P, u, 0.01, ProcessNoiseConfig())
        np.testing.assert_array_equal(P2[15:, 15:], 0)

    def test_noise_config_validation(self):
        self.assertRaises(ValueError, ProcessNoiseConfig, sigma_gyro=-1.0)


class TestPropagationJacobian(TestCase):

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            x = random_state(rng)
            u = ImuSample(0.0, rng.normal(size=3) * 0.5,
                          rng.normal(size=3) + AT_REST)
            dt = rng.uniform(0.001, 0.05)
            F = propagation_jacobian(x, u, dt)
            F_num = numeric_state_jacobian(
                lambda y: propagate_state(y, u, dt), x)
            np.testing.assert_allclose(F_num, F, rtol=1e-5, atol=1e-6)


def _imu_window(gyro, t_end=0.1, step=0.005):
    return [ImuSample(i * step, gyro, AT_REST)
            for i in range(int(round(t_end / step)) + 1)]


def _sweep_offsets(n, sweep=0.1):
    return -np.linspace(sweep, 0.0, n)


class TestUndistort(TestCase):

    def setUp(self):
        self.world = np.random.default_rng(13).uniform(-5, 5, (40, 3))

    def test_translation(self):
        v = np.array([1.0, 0.5, 0.0])
        x_end = NavState.identity().with_(pos_GI=[2.0, 0, 0], vel_GI=v)
        offsets = _sweep_offsets(len(self.world))
        # sensor position at each point time, constant velocity
        p_t = x_end.pos_GI + offsets[:, None] * v
        seen = self.world - p_t
        scan = LidarScan(0.1, seen, offsets)
        out = undistort_scan(scan, _imu_window((0, 0, 0)), x_end)
        np.testing.assert_allclose(out.points, self.world - x_end.pos_GI,
                                   atol=1e-9)
        np.testing.assert_array_equal(out.t_offset, 0)

    def test_rotation(self):
        w = np.array([0.0, 0.0, 0.5])
        x_end = NavState.identity().with_(rot_GI=so3_exp([0, 0, 0.3]))
        offsets = _sweep_offsets(len(self.world))
        seen = np.array([(x_end.rot_GI * so3_exp(w * dt)).inv().apply(p)
                         for p, dt in zip(self.world, offsets)])
        scan = LidarScan(0.1, seen, offsets)
        out = undistort_scan(scan, _imu_window(w), x_end)
        np.testing.assert_allclose(out.points,
                                   x_end.rot_GI.inv().apply(self.world),
                                   atol=1e-9)

    def test_points_at_sweep_end_unchanged(self):
        x_end = NavState.identity().with_(vel_GI=[1.0, 0, 0])
        scan = LidarScan(0.1, self.world, np.zeros(len(self.world)))
        out = undistort_scan(scan, _imu_window((0, 0, 0.2)), x_end)
        np.testing.assert_allclose(out.points, self.world, atol=1e-12)

    def test_window_must_cover_the_sweep(self):
        scan = LidarScan(0.1, self.world, _sweep_offsets(len(self.world)))
        late = [u for u in _imu_window((0, 0, 0)) if u.t >= 0.05]
        self.assertRaises(CoverageGap, undistort_scan, scan, late,
                          NavState.identity())

    def test_history_before_the_sweep_is_ignored(self):
        w = (0.0, 0.1, 0.5)
        offsets = _sweep_offsets(len(self.world))
        scan = LidarScan(0.1, self.world, offsets)
        x_end = NavState.identity().with_(vel_GI=[0.3, 0, 0])
        short = undistort_scan(scan, _imu_window(w), x_end)
        history = [ImuSample(-1.0 + i * 0.005, (1.0, -2.0, 3.0), (0, 0, 0))
                   for i in range(200)]
        out = undistort_scan(scan, history + _imu_window(w), x_end)
        np.testing.assert_allclose(out.points, short.points, atol=1e-12)

    def test_empty_scan(self):
        scan = LidarScan(0.1, np.zeros((0, 3)), np.zeros(0))
        out = undistort_scan(scan, [], NavState.identity())
        self.assertEqual(len(out), 0)


class TestStateMinus(TestCase):

    def test_propagated_difference_is_small_for_small_dt(self):
        rng = np.random.default_rng(14)
        x = random_state(rng)
        u = ImuSample(0.0, (0, 0, 0), AT_REST)
        d = boxminus(propagate_state(x, u, 1e-4), x)
        self.assertLess(np.linalg.norm(d), 1e-2)


class TestNoiseFreeDeadReckoning(TestCase):

    def test_follows_the_ground_truth(self):
        cfg = SimConfig(noise_scale=0.0, duration=12.0)
        sim = Synthesizer(cfg)
        imu = sim.imu()
        m = sim.traj.sample([0.0])
        x = NavState.identity(extr_W=sim.traj.extr_W).with_(
            rot_GI=m.rot_GI[0], pos_GI=m.pos_GI[0], vel_GI=m.vel_GI[0])
        stop = 10.0 * cfg.imu_rate
        for u, nxt in zip(imu[:int(stop)], imu[1:]):
            x = propagate_state(x, u, nxt.t - u.t)

        truth = sim.traj.sample([imu[int(stop)].t])
        self.assertLess(np.linalg.norm(x.pos_GI - truth.pos_GI[0]), 1e-3)
        self.assertLess(np.linalg.norm(x.vel_GI - truth.vel_GI[0]), 2e-3)
        d = (truth.rot_GI[0].inv() * x.rot_GI).magnitude()
        self.assertLess(d, 1e-3)
