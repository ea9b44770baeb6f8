# see LICENSE
"""
Replay of a sensor log through the estimator

:func:`run` walks a sorted record stream once. IMU samples drive the
propagation, wheel and UWB samples are buffered, and each LiDAR scan
triggers one iterated update that fuses the scan with every buffered
sample of a constraint family active in the current mode.
"""

from collections import deque
from dataclasses import dataclass, field
import logging

import numpy as np
from scipy.spatial.transform import Rotation

from liuw.errors import (AntennaAtAnchor, EmptyStream, LiuwError,
                         NotStationary, NumericalFailure, PipelineError,
                         SingularInnovation)
from liuw.estimation import consts
from liuw.estimation.degradation import analyze
from liuw.estimation.ieskf import UpdateResult, update
from liuw.estimation.manifold import NavState
from liuw.estimation.measurements import (UWB_DISTANCE, UWB_POSITION, WHEEL,
                                          LidarPlaneProvider, UwbFixProvider,
                                          UwbRangeProvider, WheelProvider,
                                          gate, uwb_distance_residual,
                                          uwb_position_residual)
from liuw.estimation.mode_switch import (ModeSwitcher, enabled_constraints,
                                         in_region)
from liuw.estimation.plane_map import VoxelPlaneMap, voxel_downsample
from liuw.estimation.propagation import propagate, undistort_scan
from liuw.records import (GROUND_TRUTH, IMU, LIDAR, UWB_FIX, UWB_RANGE, WHEEL
                          as WHEEL_KIND, anchor_index)

logger = logging.getLogger(__name__)

# IMU history kept for undistortion, seconds
IMU_HISTORY = 0.5


@dataclass(frozen=True)
class UpdateDiagnostics:
    """
    What happened at one LiDAR update

    :ivar report: degradation of the prior covariance
    :ivar pos_cov: 3x3 posterior position covariance
    :ivar dropped: the update failed numerically and the prior was kept
    :ivar weak_dirs: position directions left out of the LiDAR rows
    """
    t: float
    mode: object
    in_region: bool
    report: object
    residual_stats: dict
    iters: int
    pos_cov: np.ndarray
    dropped: bool = False
    weak_dirs: int = 0


@dataclass
class PipelineResult:
    """
    :ivar times: pose timestamps, one per LiDAR scan
    :ivar positions: (n, 3) IMU positions in the global frame
    :ivar quats: (n, 4) IMU attitudes, scalar last
    :ivar updates: one :class:`UpdateDiagnostics` per pose
    :ivar plane_map: the map at the end of the run
    :ivar ground_truth: ground-truth samples found in the log
    """
    times: np.ndarray
    positions: np.ndarray
    quats: np.ndarray
    updates: list
    plane_map: VoxelPlaneMap
    ground_truth: list = field(default_factory=list)
    x_final: object = None

    def __len__(self):
        return len(self.times)


def initial_covariance(cfg):
    """Diagonal covariance built from ``cfg.init``"""
    init = cfg.init
    diag = np.zeros(consts.STATE_DIM)
    diag[consts.SLICE_ROT] = init.sigma_rot ** 2
    diag[consts.SLICE_POS] = init.sigma_pos ** 2
    diag[consts.SLICE_VEL] = init.sigma_vel ** 2
    diag[consts.SLICE_BG] = init.sigma_bias_gyro ** 2
    diag[consts.SLICE_BA] = init.sigma_bias_accel ** 2
    diag[consts.SLICE_GRAV] = init.sigma_gravity ** 2
    diag[18:] = init.sigma_extr ** 2
    return np.diag(diag)


def initialize(records, cfg):
    """
    Static initialisation from the start of the stream

    Uses the records within ``cfg.init.window`` seconds of the first one:
    the gyro bias is the mean rate, roll and pitch level the mean specific
    force, yaw is zero and gravity is fixed to (0, 0, -9.81). The start
    position comes from the first UWB fix in the window, corrected for
    the antenna lever arm.

    :type records: list of SensorRecord
    :type cfg: PipelineConfig
    :raise EmptyStream: no records, or too few IMU samples in the window
    :raise NotStationary: the accelerometer varies too much
    :return: (state, covariance)
    """
    if not records:
        raise EmptyStream("no records to initialise from")

    init = cfg.init
    t_stop = records[0].t + init.window
    window = [r for r in records if r.t <= t_stop]
    imu = [r.payload for r in window if r.kind == IMU]
    if len(imu) < init.min_imu_samples:
        raise EmptyStream("%d IMU samples in the first %.2f s, %d needed"
                          % (len(imu), init.window, init.min_imu_samples))

    gyro = np.array([u.gyro for u in imu])
    accel = np.array([u.accel for u in imu])
    var = accel.var(axis=0).max()
    if var > init.max_accel_var:
        raise NotStationary("accelerometer variance %.4f exceeds %.4f"
                            % (var, init.max_accel_var))

    f = accel.mean(axis=0)
    pitch = np.arctan2(-f[0], np.hypot(f[1], f[2]))
    roll = np.arctan2(f[1], f[2])
    rot = Rotation.from_euler('ZYX', [0.0, pitch, roll])
    extr_L, extr_U, extr_W = cfg.extrinsics.build()

    fixes = [r.payload for r in window if r.kind == UWB_FIX]
    if fixes:
        pos = fixes[0].pos - rot.apply(extr_U.trans)
    elif init.position is not None:
        pos = np.array(init.position)
    else:
        pos = np.zeros(3)

    x = NavState(rot, pos, np.zeros(3), gyro.mean(axis=0), np.zeros(3),
                 (0.0, 0.0, -consts.STANDARD_GRAVITY), extr_L, extr_U, extr_W)
    logger.info("initialised from %d IMU samples: position %s, roll %.4f, "
                "pitch %.4f, %s"
                % (len(imu), np.round(pos, 3), roll, pitch,
                   "UWB fix" if fixes else "no UWB fix"))
    return x, initial_covariance(cfg)


class Estimator:
    """
    I hold the filter between records

    Feed records in log order with :meth:`feed`; :meth:`result` returns
    what has been estimated so far.
    """

    def __init__(self, x, P, cfg):
        self.x = x
        self.P = P
        self.cfg = cfg
        self.t = None
        self.last_imu = None
        self.imu_history = deque()
        self.anchors = anchor_index(cfg.anchors)
        self.plane_map = VoxelPlaneMap(cfg.plane_map)
        self.switcher = ModeSwitcher(cfg.region, cfg.switch)
        self.p_post = x.pos_GI
        self.pending_fixes = []
        self.pending_ranges = []
        self.pending_wheel = []
        self.ground_truth = []
        self.times = []
        self.positions = []
        self.quats = []
        self.updates = []

    def feed(self, record):
        handler = {
            IMU: self._imu,
            WHEEL_KIND: self._wheel,
            UWB_RANGE: self.pending_ranges.append,
            UWB_FIX: self.pending_fixes.append,
            LIDAR: self._lidar,
            GROUND_TRUTH: self.ground_truth.append,
        }[record.kind]
        handler(record.payload)

    def _propagate_to(self, t):
        if self.last_imu is None or t <= self.t:
            return

        self.x, self.P = propagate(self.x, self.P, self.last_imu, t - self.t,
                                   self.cfg.process)
        self.t = t

    def _imu(self, u):
        if self.last_imu is None:
            self.t = u.t
        else:
            self._propagate_to(u.t)

        self.last_imu = u
        self.imu_history.append(u)
        while self.imu_history and \
                self.imu_history[0].t < u.t - IMU_HISTORY:
            self.imu_history.popleft()

    def _wheel(self, s):
        if self.last_imu is None:
            logger.debug("wheel sample at t=%.3f before any IMU, skipped"
                         % s.t)
            return

        self.pending_wheel.append(s)

    def _nearest_gyro(self, t):
        times = np.array([u.t for u in self.imu_history])
        return self.imu_history[int(np.argmin(np.abs(times - t)))].gyro

    def _accept(self, block):
        try:
            return gate(block, self.P, self.cfg.measurement.gate_prob)
        except SingularInnovation as e:
            logger.warning("t=%.3f: %s, sample skipped" % (self.t, e))
            return False

    def _preprocess(self, scan):
        pre = self.cfg.preprocess
        points = scan.points
        d = np.linalg.norm(points, axis=1)
        points = points[(d >= pre.min_range) & (d <= pre.max_range)]
        return (voxel_downsample(points, pre.scan_voxel),
                voxel_downsample(points, pre.map_voxel))

    def _providers(self, families, scan_points):
        cfg = self.cfg
        providers = []
        if len(self.plane_map):
            meas = cfg.measurement
            providers.append(LidarPlaneProvider(
                self.plane_map, scan_points, meas.sigma_lidar,
                rematch_dist=meas.lidar_rematch_dist,
                min_info=meas.lidar_min_info))

        if UWB_POSITION in families:
            for fix in self.pending_fixes:
                if self._accept(uwb_position_residual(self.x, fix)):
                    providers.append(UwbFixProvider(fix))

        if UWB_DISTANCE in families:
            for s in self.pending_ranges:
                try:
                    block = uwb_distance_residual(self.x, s, self.anchors)
                except AntennaAtAnchor as e:
                    logger.warning("t=%.3f: %s" % (s.t, e))
                    continue

                if self._accept(block):
                    providers.append(UwbRangeProvider(s, self.anchors))

        if WHEEL in families:
            providers.extend(WheelProvider(s, self._nearest_gyro(s.t))
                             for s in self.pending_wheel)

        self.pending_fixes, self.pending_ranges, self.pending_wheel = \
            [], [], []
        return providers

    def _lidar(self, scan):
        if self.last_imu is None:
            logger.debug("scan at t=%.3f before any IMU, skipped" % scan.t)
            return

        t = scan.t_end
        self._propagate_to(t)
        scan = undistort_scan(scan, list(self.imu_history), self.x)
        scan_points, map_points = self._preprocess(scan)

        report = analyze(self.P, self.cfg.degradation)
        mode = self.switcher.step(t, self.p_post, report)
        inside = in_region(self.p_post, self.cfg.region)
        families = enabled_constraints(mode, self.cfg.enable_uwb,
                                       self.cfg.enable_wheel,
                                       self.cfg.switch.wheel_always_on)
        providers = self._providers(families, scan_points)

        dropped = False
        try:
            result = update(self.x, self.P, providers, self.cfg.update)
        except (NumericalFailure, SingularInnovation) as e:
            logger.warning("t=%.3f: update dropped, keeping the prior: %s"
                           % (t, e))
            result = UpdateResult(self.x, self.P, 0, converged=False)
            dropped = True

        self.x, self.P = result.x_post, result.P_post
        self.p_post = self.x.pos_GI
        lidar = [p for p in providers if isinstance(p, LidarPlaneProvider)]
        weak = lidar[0].weak.shape[1] if lidar and not dropped else 0
        if weak:
            logger.debug("t=%.3f: %d position direction(s) left to the "
                         "other sensors" % (t, weak))

        if len(map_points):
            world = self.x.rot_GI.apply(self.x.extr_L.transform(map_points)) \
                + self.x.pos_GI
            added = self.plane_map.insert(world)
            logger.debug("t=%.3f: %d map points added, %d total"
                         % (t, added, len(self.plane_map)))

        self.times.append(t)
        self.positions.append(self.x.pos_GI.copy())
        self.quats.append(self.x.rot_GI.as_quat())
        self.updates.append(UpdateDiagnostics(
            t, mode, inside, report, result.residual_stats, result.iters,
            self.P[consts.SLICE_POS, consts.SLICE_POS].copy(), dropped,
            weak))

    def result(self):
        return PipelineResult(np.array(self.times),
                              np.array(self.positions).reshape(-1, 3),
                              np.array(self.quats).reshape(-1, 4),
                              self.updates, self.plane_map,
                              self.ground_truth, self.x)


def run(records, cfg):
    """
    Runs the estimator over a sorted record stream

    :type records: list of SensorRecord
    :type cfg: PipelineConfig
    :raise EmptyStream: no records
    :raise NotStationary: initialisation failed
    :raise PipelineError: a record could not be processed; carries its
                          index
    :rtype: PipelineResult
    """
    x, P = initialize(records, cfg)
    est = Estimator(x, P, cfg)
    for index, record in enumerate(records):
        try:
            est.feed(record)
        except LiuwError as e:
            raise PipelineError(index, e)

    result = est.result()
    logger.info("run finished: %d poses, %d map points"
                % (len(result), len(result.plane_map)))
    return result
