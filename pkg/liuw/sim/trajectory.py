# see LICENSE
"""
Closed-form ground-truth motion through the tunnel

The wheel frame origin drives along the tunnel with heading
psi(s) = A sin(k s), k = 2 pi / wavelength, s being the arc length. The
position integrals of cos(psi) and sin(psi) have no elementary form; the
Jacobi-Anger expansion turns them into quickly converging series of
Bessel functions::

    x(s) = J0(A) s + sum_n 2 J_2n(A) sin(2n k s) / (2n k)
    y(s) = sum_n 2 J_2n+1(A) (1 - cos((2n+1) k s)) / ((2n+1) k)

Speed along the path is zero for ``static_time`` seconds, then rises
through a quintic smoothstep over ``ramp_time`` seconds and stays at
``speed``. The IMU pose follows from the wheel pose through the wheel
extrinsic, so the non-holonomic constraint holds exactly at the wheel
origin and the lever arm shows up in the IMU motion.
"""

from dataclasses import dataclass
import logging

import numpy as np
from scipy.spatial.transform import Rotation
from scipy.special import jv

from liuw.estimation.consts import STANDARD_GRAVITY

logger = logging.getLogger(__name__)

GRAVITY_G = np.array([0.0, 0.0, -STANDARD_GRAVITY])

# Bessel terms kept; J_n(0.1) is below 1e-20 from n = 14 on
_TERMS = 12


@dataclass(frozen=True)
class MotionSamples:
    """
    Ground truth at an array of times (all arrays have a leading axis n)

    :ivar rot_GI: IMU attitude, a stacked Rotation
    :ivar pos_GI: IMU position, global frame
    :ivar vel_GI: IMU velocity, global frame
    :ivar acc_GI: IMU acceleration, global frame
    :ivar omega_I: angular rate, IMU frame
    :ivar specific_force: accelerometer reading without errors, IMU frame
    :ivar rot_GW: wheel frame attitude
    :ivar pos_GW: wheel frame origin
    :ivar vel_GW: wheel frame origin velocity, global frame
    """
    t: np.ndarray
    rot_GI: Rotation
    pos_GI: np.ndarray
    vel_GI: np.ndarray
    acc_GI: np.ndarray
    omega_I: np.ndarray
    specific_force: np.ndarray
    rot_GW: Rotation
    pos_GW: np.ndarray
    vel_GW: np.ndarray


def _smoothstep(tau):
    """Quintic speed profile h, its integral and its derivative"""
    h = tau ** 3 * (10 - 15 * tau + 6 * tau ** 2)
    H = tau ** 4 * (2.5 - 3 * tau + tau ** 2)
    dh = 30 * tau ** 2 * (1 - tau) ** 2
    return h, H, dh


class Trajectory:
    """
    I evaluate the ground-truth motion of a :class:`SimConfig` run at any
    time in [0, total_time]
    """

    def __init__(self, cfg):
        self.cfg = cfg
        self.k = 2 * np.pi / cfg.weave_wavelength
        A = cfg.weave_amplitude
        peak_rate = A * self.k * cfg.speed
        if peak_rate > cfg.max_yaw_rate:
            raise ValueError("weave needs %.3f rad/s, above max_yaw_rate %.3f"
                             % (peak_rate, cfg.max_yaw_rate))

        self.extr_L, self.extr_U, self.extr_W = cfg.extrinsics.build()
        self._J = jv(np.arange(2 * _TERMS + 2), A)
        # IMU at the configured start; the wheel origin sits at its lever arm
        rot0 = Rotation.identity() * self.extr_W.rot.inv()
        self.origin_W = np.asarray(cfg.start_position) + \
            rot0.apply(self.extr_W.trans)
        logger.debug("trajectory: %.1f m over %.1f s, peak yaw rate %.4f"
                     % (cfg.path_length, cfg.total_time, peak_rate))

    @property
    def total_time(self):
        return self.cfg.total_time

    def arc(self, t):
        """Arc length, speed and tangential acceleration at ``t``"""
        cfg = self.cfg
        t = np.asarray(t, dtype=float)
        v, T0, Tr = cfg.speed, cfg.static_time, cfg.ramp_time
        tau = np.clip((t - T0) / Tr, 0.0, 1.0)
        h, H, dh = _smoothstep(tau)
        ramping = (t > T0) & (t < T0 + Tr)
        cruising = t >= T0 + Tr

        s = np.where(cruising, v * Tr / 2 + v * (t - T0 - Tr), v * Tr * H)
        s_dot = np.where(cruising, v, v * h)
        s_ddot = np.where(ramping, v * dh / Tr, 0.0)
        return s, s_dot, s_ddot

    def heading(self, s):
        """psi(s) and its first two derivatives with respect to s"""
        A, k = self.cfg.weave_amplitude, self.k
        return (A * np.sin(k * s), A * k * np.cos(k * s),
                -A * k ** 2 * np.sin(k * s))

    def planar_position(self, s):
        """Wheel origin displacement (x, y) after arc length ``s``"""
        s = np.asarray(s, dtype=float)
        k, J = self.k, self._J
        x = J[0] * s
        y = np.zeros_like(s)
        for n in range(1, _TERMS + 1):
            x = x + 2 * J[2 * n] * np.sin(2 * n * k * s) / (2 * n * k)

        for n in range(_TERMS + 1):
            m = 2 * n + 1
            y = y + 2 * J[m] * (1 - np.cos(m * k * s)) / (m * k)

        return x, y

    def sample(self, t):
        """
        Ground truth at the times ``t``

        :rtype: MotionSamples
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        s, s_dot, s_ddot = self.arc(t)
        psi, dpsi_ds, d2psi_ds2 = self.heading(s)
        psi_dot = dpsi_ds * s_dot
        psi_ddot = d2psi_ds2 * s_dot ** 2 + dpsi_ds * s_ddot

        x, y = self.planar_position(s)
        zeros = np.zeros_like(t)
        pos_W = self.origin_W + np.column_stack([x, y, zeros])
        c, sn = np.cos(psi), np.sin(psi)
        tangent = np.column_stack([c, sn, zeros])
        normal = np.column_stack([-sn, c, zeros])
        vel_W = s_dot[:, None] * tangent
        acc_W = s_ddot[:, None] * tangent + \
            (s_dot * psi_dot)[:, None] * normal

        rot_GW = Rotation.from_rotvec(np.column_stack([zeros, zeros, psi]))
        rot_GI = rot_GW * self.extr_W.rot.inv()
        lever = rot_GI.apply(np.broadcast_to(self.extr_W.trans, (len(t), 3)))
        z = np.array([0.0, 0.0, 1.0])
        w_G = psi_dot[:, None] * z
        alpha_G = psi_ddot[:, None] * z

        pos_I = pos_W - lever
        vel_I = vel_W - np.cross(w_G, lever)
        acc_I = acc_W - np.cross(alpha_G, lever) - \
            np.cross(w_G, np.cross(w_G, lever))

        omega_I = rot_GI.inv().apply(w_G)
        f_I = rot_GI.inv().apply(acc_I - GRAVITY_G)
        return MotionSamples(t, rot_GI, pos_I, vel_I, acc_I, omega_I, f_I,
                             rot_GW, pos_W, vel_W)

    def lidar_pose(self, t):
        """Global attitude and origin of the LiDAR at the times ``t``"""
        m = self.sample(t)
        rot = m.rot_GI * self.extr_L.rot
        pos = m.pos_GI + m.rot_GI.apply(
            np.broadcast_to(self.extr_L.trans, (len(m.t), 3)))
        return rot, pos


def generate_trajectory(cfg):
    """
    Builds the ground-truth motion of a run

    :type cfg: SimConfig
    :raise ValueError: the weave exceeds ``cfg.max_yaw_rate``
    :rtype: Trajectory
    """
    return Trajectory(cfg)
