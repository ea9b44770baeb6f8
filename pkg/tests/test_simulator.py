from unittest import TestCase

import numpy as np

from liuw.errors import DegenerateGeometry, InsufficientAnchors
from liuw.estimation.consts import STANDARD_GRAVITY
from liuw.records import (IMU, LIDAR, UWB_FIX, UWB_RANGE, WHEEL,
                          UwbRangeSample, anchor_index, count_kinds,
                          encode_record)
from liuw.sim import (SimConfig, TunnelWorld, UwbPositioner,
                      generate_trajectory, synthesize, trilaterate)
from liuw.sim.config import DEFAULT_ANCHORS, START_POSITION
from liuw.sim.synthesize import lidar_directions
from tests.helpers import short_sim

ANCHORS = anchor_index(DEFAULT_ANCHORS)


def epoch(p, t=0.0, anchors=ANCHORS, sigma=0.1):
    return [UwbRangeSample(t, i, float(np.linalg.norm(a - p)), sigma)
            for i, a in sorted(anchors.items())]


class TestTrajectory(TestCase):

    def setUp(self):
        self.cfg = SimConfig(duration=30.0)
        self.traj = generate_trajectory(self.cfg)

    def test_arc_length(self):
        s, s_dot, _ = self.traj.arc(self.cfg.total_time)
        self.assertAlmostEqual(float(s), self.cfg.speed * self.cfg.duration)
        self.assertAlmostEqual(float(s_dot), self.cfg.speed)

    def test_starts_at_rest(self):
        m = self.traj.sample([0.0, 0.5])
        np.testing.assert_allclose(m.pos_GI[0], START_POSITION, atol=1e-12)
        np.testing.assert_allclose(m.vel_GI, 0, atol=1e-12)

    def test_velocity_is_the_derivative_of_position(self):
        h = 1e-5
        for t in (1.7, 2.5, 12.0, 25.3):
            m = self.traj.sample([t - h, t, t + h])
            fd = (m.pos_GI[2] - m.pos_GI[0]) / (2 * h)
            np.testing.assert_allclose(m.vel_GI[1], fd, atol=1e-7)
            fd = (m.vel_GI[2] - m.vel_GI[0]) / (2 * h)
            np.testing.assert_allclose(m.acc_GI[1], fd, atol=1e-6)

    def test_heading_follows_the_path(self):
        m = self.traj.sample(np.linspace(5, 30, 40))
        heading = m.rot_GW.apply(np.tile([1.0, 0, 0], (40, 1)))
        direction = m.vel_GW / np.linalg.norm(m.vel_GW, axis=1)[:, None]
        np.testing.assert_allclose(heading, direction, atol=1e-9)

    def test_weave_too_fast(self):
        cfg = SimConfig(weave_amplitude=0.5, weave_wavelength=1.0)
        self.assertRaises(ValueError, generate_trajectory, cfg)


class TestSimConfig(TestCase):

    def test_total_time(self):
        cfg = SimConfig()
        self.assertAlmostEqual(cfg.total_time, 222.0)
        self.assertAlmostEqual(cfg.path_length, 66.0)

    def test_validation(self):
        self.assertRaises(ValueError, SimConfig, speed=0.0)
        self.assertRaises(ValueError, SimConfig, imu_rate=0)
        self.assertRaises(ValueError, SimConfig, noise_scale=-1.0)
        self.assertRaises(ValueError, SimConfig, lidar_sweep=0.5)
        self.assertRaises(ValueError, SimConfig,
                          anchors=DEFAULT_ANCHORS + DEFAULT_ANCHORS[:1])

    def test_noise_free(self):
        self.assertEqual(SimConfig(seed=4).noise_free().noise_scale, 0.0)


class TestTunnelWorld(TestCase):

    def setUp(self):
        self.world = TunnelWorld()

    def test_bare_segment(self):
        origin = np.array([50.0, 0.0, 1.5])
        dirs = np.array([[0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1],
                         [-1, 0, 0], [1, 0, 0]], dtype=float)
        d = self.world.raycast(origin, dirs, 200.0)
        np.testing.assert_allclose(d[:5], [2.0, 2.0, 1.5, 1.5, 50.0])
        self.assertTrue(np.isinf(d[5]))

    def test_max_range(self):
        d = self.world.raycast([50.0, 0.0, 1.5], [[-1.0, 0, 0]], 10.0)
        self.assertTrue(np.isinf(d[0]))

    def test_box_hit(self):
        lo, hi = self.world.boxes[0]
        origin = np.array([(lo[0] + hi[0]) / 2, 0.0, 0.3])
        d = self.world.raycast(origin, [[0.0, 1.0, 0.0]], 60.0)
        self.assertAlmostEqual(d[0], lo[1])

    def test_bare_tunnel_is_invariant_along_x(self):
        dirs, _ = lidar_directions(SimConfig())
        for max_range, xs in ((10.0, (35.5, 42.8, 60.0)),
                              (60.0, (85.5, 92.8))):
            ranges = [self.world.raycast([x, 0.1, 0.8], dirs, max_range)
                      for x in xs]
            self.assertTrue(np.isfinite(ranges[0]).any())
            for other in ranges[1:]:
                np.testing.assert_array_equal(other, ranges[0])

    def test_clutter_in_range_from_the_bare_segment(self):
        lo, hi = self.world.boxes[-1]
        inner_y = lo[1] if lo[1] > 0 else hi[1]
        target = np.array([(lo[0] + hi[0]) / 2, inner_y, 0.3])
        origin = np.array([self.world.config.outer_length + 5.0, 0.0, 1.0])
        dist = np.linalg.norm(target - origin)
        direction = [(target - origin) / dist]
        near = self.world.raycast(origin, direction, 60.0)[0]
        far = self.world.raycast(origin + [60.0, 0, 0], direction, 60.0)[0]
        self.assertAlmostEqual(near, dist)
        self.assertGreater(far, dist)

    def test_contains(self):
        lo, hi = self.world.boxes[0]
        inside = self.world.contains([[50.0, 0.0, 1.5], (lo + hi) / 2,
                                      [50.0, 3.0, 1.5], [-1.0, 0, 1.0]])
        np.testing.assert_array_equal(inside, [True, False, False, False])

    def test_layout_is_reproducible(self):
        np.testing.assert_array_equal(TunnelWorld().boxes, self.world.boxes)
        self.assertTrue(np.all(np.abs(self.world.boxes[:, :, 1]).min(axis=1)
                               >= self.world.config.free_half_width))


class TestTrilateration(TestCase):

    def test_noiseless(self):
        p = np.array([13.0, 0.2, 0.9])
        fix = trilaterate(epoch(p), ANCHORS)
        np.testing.assert_allclose(fix.pos, p, atol=1e-6)
        self.assertTrue(np.all(fix.sigma > 0))

    def test_least_squares_optimum(self):
        rng = np.random.default_rng(61)
        p = np.array([14.0, -0.3, 1.0])
        ranges = [UwbRangeSample(0.0, s.anchor_id,
                                 s.range + rng.normal() * 0.05, 0.1)
                  for s in epoch(p)]
        fix = trilaterate(ranges, ANCHORS)

        def cost(q):
            return sum((np.linalg.norm(ANCHORS[s.anchor_id] - q) -
                        s.range) ** 2 for s in ranges)

        offsets = np.linspace(-0.01, 0.01, 5)
        best = min(cost(fix.pos + [dx, dy, dz]) for dx in offsets
                   for dy in offsets for dz in offsets)
        self.assertLessEqual(cost(fix.pos), best + 1e-12)

    def test_monte_carlo(self):
        rng = np.random.default_rng(62)
        p = np.array([13.963, 0.0, 1.0])
        np.testing.assert_allclose(trilaterate(epoch(p), ANCHORS).pos, p,
                                   atol=1e-6)
        errors = []
        for _ in range(100):
            ranges = [UwbRangeSample(0.0, s.anchor_id,
                                     s.range + rng.normal() * 0.1, 0.1)
                      for s in epoch(p)]
            errors.append(np.linalg.norm(trilaterate(ranges, ANCHORS).pos -
                                         p))
        self.assertLess(np.mean(errors), 0.35)

    def test_matches_a_grid_search(self):
        rng = np.random.default_rng(63)
        p = np.array([13.963, 0.0, 1.0])
        ids = sorted(ANCHORS)
        A = np.array([ANCHORS[i] for i in ids])

        def cost(q, rho):
            d = np.linalg.norm(q[:, None, :] - A[None], axis=2)
            return ((d - rho) ** 2).sum(axis=1)

        def grid(center, half, step):
            ticks = np.arange(-half, half + step / 2, step)
            g = np.stack(np.meshgrid(ticks, ticks, ticks), -1).reshape(-1, 3)
            return center + g

        for _ in range(10):
            rho = np.array([s.range for s in epoch(p)]) + \
                rng.normal(size=len(ids)) * 0.1
            ranges = [UwbRangeSample(0.0, i, r, 0.1)
                      for i, r in zip(ids, rho)]
            fix = trilaterate(ranges, ANCHORS).pos
            coarse = grid(p, 1.0, 0.05)
            c = coarse[np.argmin(cost(coarse, rho))]
            fine = grid(c, 0.1, 0.01)
            costs = cost(fine, rho)
            best = fine[np.argmin(costs)]
            self.assertLessEqual(cost(fix[None], rho)[0], costs.min() + 1e-9)
            self.assertLessEqual(np.linalg.norm(fix - best), 0.03)

    def test_insufficient_anchors(self):
        ranges = epoch(np.array([13.0, 0.0, 1.0]))[:2]
        self.assertRaises(InsufficientAnchors, trilaterate, ranges, ANCHORS)
        self.assertRaises(InsufficientAnchors, trilaterate,
                          ranges + ranges, ANCHORS)

    def test_collinear_anchors(self):
        anchors = {1: np.array([0.0, 0, 2]), 2: np.array([1.0, 0, 2]),
                   3: np.array([2.0, 0, 2])}
        ranges = epoch(np.array([1.0, 1.0, 0.0]), anchors=anchors)
        self.assertRaises(DegenerateGeometry, trilaterate, ranges, anchors)


class TestUwbPositioner(TestCase):

    def test_outlier_is_gated(self):
        p = np.array([13.5, 0.1, 0.9])
        positioner = UwbPositioner(ANCHORS)
        for i in range(5):
            fix = positioner.step(epoch(p, t=i * 0.05))

        bad = epoch(p, t=0.25)
        bad[0] = UwbRangeSample(0.25, bad[0].anchor_id, bad[0].range + 5.0,
                                0.1)
        fix = positioner.step(bad)
        np.testing.assert_allclose(fix.pos, p, atol=1e-6)
        self.assertAlmostEqual(fix.t, 0.25)

    def test_empty_epoch(self):
        self.assertIsNone(UwbPositioner(ANCHORS).step([]))


class TestSynthesis(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.cfg = short_sim(seed=5)
        cls.records = synthesize(cls.cfg)
        cls.traj = generate_trajectory(cls.cfg)

    def of_kind(self, kind):
        return [r.payload for r in self.records if r.kind == kind]

    def test_sorted(self):
        keys = [r.sort_key for r in self.records]
        self.assertEqual(keys, sorted(keys))

    def test_rates(self):
        counts = count_kinds(self.records)
        T = self.cfg.total_time
        self.assertEqual(counts[IMU], int(T * self.cfg.imu_rate) + 1)
        self.assertEqual(counts[WHEEL], int(T * self.cfg.wheel_rate) + 1)
        self.assertEqual(counts[LIDAR], int(T * self.cfg.lidar_rate))
        self.assertEqual(counts[UWB_RANGE] % len(DEFAULT_ANCHORS), 0)
        self.assertGreater(counts[UWB_FIX], 0)

    def test_deterministic(self):
        again = synthesize(self.cfg)
        self.assertEqual([encode_record(r) for r in again],
                         [encode_record(r) for r in self.records])
        other = synthesize(short_sim(seed=6))
        self.assertNotEqual([encode_record(r) for r in other[:50]],
                            [encode_record(r) for r in self.records[:50]])

    def test_lidar_offsets(self):
        for scan in self.of_kind(LIDAR):
            self.assertGreater(len(scan), 0)
            self.assertGreaterEqual(scan.t_offset.min(),
                                    -self.cfg.lidar_sweep)
            self.assertLessEqual(scan.t_offset.max(), 0.0)


class TestNoiseFreeSynthesis(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.cfg = short_sim(noise_scale=0.0)
        cls.records = synthesize(cls.cfg)

    def of_kind(self, kind):
        return [r.payload for r in self.records if r.kind == kind]

    def test_static_imu(self):
        for s in self.of_kind(IMU):
            if s.t > self.cfg.static_time:
                break

            np.testing.assert_allclose(s.gyro, 0, atol=1e-12)
            np.testing.assert_allclose(s.accel, [0, 0, STANDARD_GRAVITY],
                                       atol=1e-9)

    def test_wheel_velocity(self):
        wheel = self.of_kind(WHEEL)
        np.testing.assert_allclose(wheel[0].vel_W, 0, atol=1e-12)
        np.testing.assert_allclose(wheel[-1].vel_W, [self.cfg.speed, 0, 0],
                                   atol=1e-12)

    def test_ranges_are_exact(self):
        traj = generate_trajectory(self.cfg)
        for s in self.of_kind(UWB_RANGE)[:40]:
            m = traj.sample([s.t])
            antenna = m.pos_GI[0] + m.rot_GI.apply(traj.extr_U.trans)[0]
            self.assertAlmostEqual(s.range, np.linalg.norm(
                ANCHORS[s.anchor_id] - antenna), places=9)


class TestUwbCoverage(TestCase):

    def test_ranges_only_inside_the_region(self):
        cfg = short_sim(region_center=START_POSITION, region_radius=0.5)
        records = synthesize(cfg)
        traj = generate_trajectory(cfg)
        times = sorted(set(r.t for r in records if r.kind == UWB_RANGE))
        self.assertGreater(len(times), 0)
        dist = np.linalg.norm(traj.sample(times).pos_GI - START_POSITION,
                              axis=1)
        self.assertTrue(np.all(dist <= 0.5))
        self.assertLess(max(times), cfg.total_time - 1.0)

    def test_disabled(self):
        counts = count_kinds(synthesize(short_sim(enable_uwb=False)))
        self.assertEqual(counts[UWB_RANGE], 0)
        self.assertEqual(counts[UWB_FIX], 0)
