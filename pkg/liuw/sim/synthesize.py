# see LICENSE
"""
Sensor synthesis along a ground-truth trajectory

All timestamps are ``i / rate`` for integer ``i`` so samples of different
sensors that coincide in time compare equal. Noise comes from a single
``numpy.random.default_rng(cfg.seed)`` drawn in a fixed order, so a seed
fully determines the log.
"""

import logging

import numpy as np

from liuw.estimation.mode_switch import UwbRegion, in_region
from liuw.records import (GroundTruthSample, ImuSample, LidarScan,
                          UwbRangeSample, WheelSample, anchor_index,
                          make_record, sort_records)
from liuw.sim.trajectory import generate_trajectory
from liuw.sim.uwb import UwbPositioner
from liuw.sim.world import TunnelWorld

logger = logging.getLogger(__name__)

# LiDAR returns closer than this are dropped (the robot's own body)
MIN_LIDAR_RANGE = 0.1


def sample_times(total_time, rate, start=0):
    """``i / rate`` for every integer i >= start with i / rate <= total"""
    n = int(np.floor(total_time * rate + 1e-9))
    return np.arange(start, n + 1) / rate


def lidar_directions(cfg):
    """
    Unit beam directions in the LiDAR frame

    :return: (directions, column index) with one row per beam, grouped by
             column (azimuth) in sweep order
    """
    elev = np.radians(np.linspace(-cfg.lidar_fov, cfg.lidar_fov,
                                  cfg.lidar_rings))
    azim = 2 * np.pi * np.arange(cfg.lidar_columns) / cfg.lidar_columns
    az, el = np.meshgrid(azim, elev, indexing='ij')
    dirs = np.column_stack([(np.cos(el) * np.cos(az)).ravel(),
                            (np.cos(el) * np.sin(az)).ravel(),
                            np.sin(el).ravel()])
    columns = np.repeat(np.arange(cfg.lidar_columns), cfg.lidar_rings)
    return dirs, columns


class Synthesizer:
    """
    I turn a :class:`~liuw.sim.config.SimConfig` into a sorted record
    stream
    """

    def __init__(self, cfg, traj=None, world=None):
        self.cfg = cfg
        self.traj = traj or generate_trajectory(cfg)
        self.world = world or TunnelWorld(cfg.world)
        self.anchors = anchor_index(cfg.anchors)
        self.region = UwbRegion(cfg.region_center, cfg.region_radius)
        self.rng = np.random.default_rng(cfg.seed)

    def _normal(self, shape, sigma):
        return self.rng.standard_normal(shape) * (sigma * self.cfg.noise_scale)

    def imu(self):
        cfg = self.cfg
        t = sample_times(cfg.total_time, cfg.imu_rate)
        dt = 1.0 / cfg.imu_rate
        m = self.traj.sample(t)
        n = len(t)
        bg = np.cumsum(self._normal((n, 3), cfg.gyro_bias_walk *
                                    np.sqrt(dt)), axis=0)
        ba = np.cumsum(self._normal((n, 3), cfg.accel_bias_walk *
                                    np.sqrt(dt)), axis=0)
        gyro = m.omega_I + bg + self._normal((n, 3),
                                             cfg.gyro_noise / np.sqrt(dt))
        accel = m.specific_force + ba + \
            self._normal((n, 3), cfg.accel_noise / np.sqrt(dt))
        return [ImuSample(ti, g, a) for ti, g, a in zip(t, gyro, accel)]

    def wheel(self):
        cfg = self.cfg
        t = sample_times(cfg.total_time, cfg.wheel_rate)
        _, s_dot, _ = self.traj.arc(t)
        vel = np.zeros((len(t), 3))
        vel[:, 0] = s_dot
        noise_x = np.hypot(cfg.wheel_noise, cfg.wheel_slip_sigma)
        noise = self._normal((len(t), 3), 1.0) * \
            np.array([noise_x, cfg.wheel_noise, cfg.wheel_noise])
        sigma = (np.hypot(cfg.wheel_sigma, cfg.wheel_slip_sigma),
                 cfg.wheel_sigma, cfg.wheel_sigma)
        return [WheelSample(ti, v, sigma) for ti, v in zip(t, vel + noise)]

    def uwb(self):
        """Ranges and smoothed fixes while the robot is in coverage"""
        cfg = self.cfg
        if not cfg.enable_uwb:
            return [], []

        t = sample_times(cfg.total_time, cfg.uwb_rate)
        m = self.traj.sample(t)
        t_U = self.traj.extr_U.trans
        antenna = m.pos_GI + m.rot_GI.apply(np.broadcast_to(t_U, (len(t), 3)))
        ids = sorted(self.anchors)
        noise = self._normal((len(t), len(ids)), cfg.uwb_range_noise)
        positioner = UwbPositioner(self.anchors, cfg.uwb_q_pos)
        ranges, fixes = [], []
        for i, ti in enumerate(t):
            if not in_region(m.pos_GI[i], self.region):
                continue

            epoch = []
            for j, anchor_id in enumerate(ids):
                d = np.linalg.norm(self.anchors[anchor_id] - antenna[i])
                epoch.append(UwbRangeSample(ti, anchor_id,
                                            max(d + noise[i, j], 1e-3),
                                            cfg.uwb_range_sigma))
            ranges.extend(epoch)
            fix = positioner.step(epoch)
            if fix is not None:
                fixes.append(fix)

        return ranges, fixes

    def lidar(self):
        cfg = self.cfg
        dirs_L, columns = lidar_directions(cfg)
        period = cfg.lidar_sweep / cfg.lidar_columns
        col_offset = -(cfg.lidar_columns - 1 - np.arange(cfg.lidar_columns)) \
            * period
        scans = []
        for t_end in sample_times(cfg.total_time, cfg.lidar_rate, start=1):
            rot, origin = self.traj.lidar_pose(t_end + col_offset)
            dirs_G = rot[columns].apply(dirs_L)
            rng = self.world.raycast(origin[columns], dirs_G,
                                     cfg.lidar_max_range)
            rng = rng + self._normal(len(rng), cfg.lidar_range_noise)
            keep = np.isfinite(rng) & (rng > MIN_LIDAR_RANGE)
            points = dirs_L[keep] * rng[keep][:, None]
            scans.append(LidarScan(t_end, points, col_offset[columns][keep]))

        return scans

    def ground_truth(self):
        cfg = self.cfg
        t = sample_times(cfg.total_time, cfg.ground_truth_rate)
        m = self.traj.sample(t)
        quat = m.rot_GI.as_quat()
        return [GroundTruthSample(ti, p, q, v)
                for ti, p, q, v in zip(t, m.pos_GI, quat, m.vel_GI)]

    def run(self):
        """
        Generates every stream

        :return: records sorted by time, ties by kind
        :rtype: list of SensorRecord
        """
        imu = self.imu()
        wheel = self.wheel()
        ranges, fixes = self.uwb()
        scans = self.lidar()
        truth = self.ground_truth()
        samples = imu + wheel + ranges + fixes + scans + truth
        logger.info("synthesized %d imu, %d wheel, %d range, %d fix, "
                    "%d scan and %d ground-truth samples"
                    % (len(imu), len(wheel), len(ranges), len(fixes),
                       len(scans), len(truth)))
        return sort_records([make_record(s) for s in samples])


def synthesize(cfg, traj=None):
    """
    Simulates a run

    :type cfg: SimConfig
    :param traj: ground truth; built from ``cfg`` when omitted
    :rtype: list of SensorRecord
    """
    return Synthesizer(cfg, traj).run()
