# see LICENSE
"""
IMU-driven propagation of the state and its covariance

The discrete model is first-order (Euler on the manifold). With the
bias-corrected rate w = w_m - b_g and specific force a = a_m - b_a::

    R <- R Exp(w dt)
    v <- v + (R a + g) dt
    p <- p + v dt + 1/2 (R a + g) dt^2

Biases, gravity and extrinsics are constant apart from their random
walks. The covariance follows P <- F P F^T + Q, Q discretized to first
order from :class:`ProcessNoiseConfig`.
"""

from dataclasses import dataclass
import logging

import numpy as np
from scipy.spatial.transform import Rotation

from liuw.errors import CoverageGap, GapTooLarge, NonMonotonicTime
from liuw.estimation import consts
from liuw.estimation.manifold import compose, right_jacobian
from liuw.records import LidarScan
from liuw.utils import skew, symmetrize

logger = logging.getLogger(__name__)

# largest IMU gap bridged without error, seconds
MAX_IMU_GAP = 0.1


@dataclass(frozen=True)
class ProcessNoiseConfig:
    """
    Continuous-time noise densities

    :ivar sigma_gyro: gyro white noise, rad/s/sqrt(Hz)
    :ivar sigma_accel: accelerometer white noise, m/s^2/sqrt(Hz)
    :ivar sigma_bg_walk: gyro bias random walk, rad/s^2/sqrt(Hz)
    :ivar sigma_ba_walk: accelerometer bias random walk, m/s^3/sqrt(Hz)
    :ivar sigma_extr: random walk of every extrinsic axis (0 freezes them)
    :ivar sigma_gravity: random walk of the gravity vector (0 freezes it)
    """
    sigma_gyro: float = 2e-3
    sigma_accel: float = 5e-3
    sigma_bg_walk: float = 1e-5
    sigma_ba_walk: float = 1e-4
    sigma_extr: float = 0.0
    sigma_gravity: float = 0.0

    def __post_init__(self):
        for name in ('sigma_gyro', 'sigma_accel', 'sigma_bg_walk',
                     'sigma_ba_walk', 'sigma_extr', 'sigma_gravity'):
            value = getattr(self, name)
            if not value >= 0:
                raise ValueError("%s must be nonnegative, got %r"
                                 % (name, value))


def check_dt(dt):
    """
    :raise NonMonotonicTime: ``dt`` is not positive
    :raise GapTooLarge: ``dt`` exceeds :data:`MAX_IMU_GAP`
    """
    if not dt > 0:
        raise NonMonotonicTime("propagation step must be positive, got %r"
                               % dt)

    if dt > MAX_IMU_GAP:
        raise GapTooLarge("IMU gap of %.3f s exceeds %.3f s"
                          % (dt, MAX_IMU_GAP))


def propagation_jacobian(x, u, dt):
    """
    Error-state transition matrix of one Euler step

    :type x: NavState
    :type u: ImuSample
    :rtype: numpy.ndarray (36x36)
    """
    R = x.rot_GI.as_matrix()
    w = u.gyro - x.bias_gyro
    a = u.accel - x.bias_accel
    F = np.eye(consts.STATE_DIM)

    Ra_x = R @ skew(a)
    F[consts.SLICE_ROT, consts.SLICE_ROT] = Rotation.from_rotvec(
        -w * dt).as_matrix()
    F[consts.SLICE_ROT, consts.SLICE_BG] = -right_jacobian(w * dt) * dt

    F[consts.SLICE_VEL, consts.SLICE_ROT] = -Ra_x * dt
    F[consts.SLICE_VEL, consts.SLICE_BA] = -R * dt
    F[consts.SLICE_VEL, consts.SLICE_GRAV] = np.eye(3) * dt

    F[consts.SLICE_POS, consts.SLICE_VEL] = np.eye(3) * dt
    F[consts.SLICE_POS, consts.SLICE_ROT] = -0.5 * Ra_x * dt ** 2
    F[consts.SLICE_POS, consts.SLICE_BA] = -0.5 * R * dt ** 2
    F[consts.SLICE_POS, consts.SLICE_GRAV] = 0.5 * np.eye(3) * dt ** 2
    return F


def process_noise(q, dt):
    """Diagonal first-order discretization of ``q`` over ``dt``"""
    diag = np.zeros(consts.STATE_DIM)
    diag[consts.SLICE_ROT] = q.sigma_gyro ** 2 * dt
    diag[consts.SLICE_VEL] = q.sigma_accel ** 2 * dt
    diag[consts.SLICE_BG] = q.sigma_bg_walk ** 2 * dt
    diag[consts.SLICE_BA] = q.sigma_ba_walk ** 2 * dt
    diag[consts.SLICE_GRAV] = q.sigma_gravity ** 2 * dt
    diag[18:] = q.sigma_extr ** 2 * dt
    return np.diag(diag)


def propagate_state(x, u, dt):
    """Mean part of :func:`propagate`; no time checks"""
    R = x.rot_GI.as_matrix()
    w = u.gyro - x.bias_gyro
    acc = R @ (u.accel - x.bias_accel) + x.gravity_G
    return x.with_(
        rot_GI=compose(x.rot_GI, Rotation.from_rotvec(w * dt)),
        vel_GI=x.vel_GI + acc * dt,
        pos_GI=x.pos_GI + x.vel_GI * dt + 0.5 * acc * dt ** 2)


def propagate(x, P, u, dt, q):
    """
    Advances the state and covariance by one IMU interval

    ``u`` is held constant over ``dt`` (the sample taken at the start of
    the interval).

    :type x: NavState
    :param P: 36x36 covariance
    :type u: ImuSample
    :param dt: interval length in seconds
    :type q: ProcessNoiseConfig

    :raise NonMonotonicTime: ``dt <= 0``
    :raise GapTooLarge: ``dt > 0.1``

    :return: propagated (state, covariance)
    :rtype: tuple
    """
    check_dt(dt)
    F = propagation_jacobian(x, u, dt)
    P_out = symmetrize(F @ P @ F.T + process_noise(q, dt))
    return propagate_state(x, u, dt), P_out


def undistort_scan(scan, imu_window, x_end):
    """
    Re-expresses every point as if sampled at the end of the sweep

    Walks the IMU samples backwards from ``x_end`` (the state at
    ``scan.t_end``), holding each sample constant until the next one; the
    backward step is the exact inverse of :func:`propagate_state`.

    :type scan: LidarScan
    :param imu_window: samples sorted by time, the first one at or before
                       the earliest point
    :type imu_window: list of ImuSample
    :type x_end: NavState

    :raise CoverageGap: the window does not span the sweep

    :return: a scan with every ``t_offset`` equal to 0
    :rtype: LidarScan
    """
    t_end = scan.t_end
    if len(scan) == 0:
        return scan

    t_start = t_end + scan.t_offset.min()
    samples = [u for u in imu_window if u.t < t_end]
    # only the last sample at or before the sweep start is needed
    first = np.searchsorted([u.t for u in samples], t_start + 1e-9,
                            side='right') - 1
    if first < 0:
        raise CoverageGap("IMU window does not reach back to %.6f" % t_start)

    samples = samples[first:]

    nodes = np.array([u.t for u in samples] + [t_end])
    if np.any(np.diff(nodes) > MAX_IMU_GAP):
        raise CoverageGap("IMU window has a gap wider than %.3f s"
                          % MAX_IMU_GAP)

    nseg = len(samples)
    rots = [None] * nseg
    pos = np.zeros((nseg, 3))
    vel = np.zeros((nseg, 3))
    acc = np.zeros((nseg, 3))
    rates = np.zeros((nseg, 3))

    R_next, p_next, v_next = x_end.rot_GI, x_end.pos_GI, x_end.vel_GI
    for i in range(nseg - 1, -1, -1):
        u = samples[i]
        dt = nodes[i + 1] - nodes[i]
        rates[i] = u.gyro - x_end.bias_gyro
        R_i = compose(R_next, Rotation.from_rotvec(-rates[i] * dt))
        acc[i] = R_i.apply(u.accel - x_end.bias_accel) + x_end.gravity_G
        vel[i] = v_next - acc[i] * dt
        pos[i] = p_next - v_next * dt + 0.5 * acc[i] * dt ** 2
        rots[i] = R_i
        R_next, p_next, v_next = R_i, pos[i], vel[i]

    t_pts = t_end + scan.t_offset
    seg = np.clip(np.searchsorted(nodes, t_pts, side='right') - 1,
                  0, nseg - 1)
    s = (t_pts - nodes[seg])[:, None]

    R_seg = Rotation.from_quat(np.array([r.as_quat() for r in rots]))
    R_pts = R_seg[seg] * Rotation.from_rotvec(rates[seg] * s)
    p_pts = pos[seg] + vel[seg] * s + 0.5 * acc[seg] * s ** 2

    extr = x_end.extr_L
    in_imu = extr.transform(scan.points)
    in_world = R_pts.apply(in_imu) + p_pts
    in_end = x_end.rot_GI.inv().apply(in_world - x_end.pos_GI)
    in_lidar = extr.rot.inv().apply(in_end - extr.trans)

    logger.debug("undistorted %d points over %d IMU segments"
                 % (len(scan), nseg))
    return LidarScan(t_end, in_lidar, np.zeros(len(scan)))
