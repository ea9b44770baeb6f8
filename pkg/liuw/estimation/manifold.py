# see LICENSE
"""
Navigation state and the generalized plus/minus operators

A :class:`NavState` lives on SO(3) x R^15 x (SO(3) x R^3)^3. Its tangent
vector (the *error state*) is a plain ``numpy`` array of 36 entries laid
out as in :mod:`liuw.estimation.consts`; covariances are 36x36 arrays in
the same order.

Rotations are :class:`scipy.spatial.transform.Rotation` objects. Every
composition goes through :func:`compose`, which rebuilds the rotation
from its quaternion so the unit norm is restored after each step.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.transform import Rotation

from liuw.estimation import consts
from liuw.utils import as_vector3, frozen, skew

_SMALL_ANGLE = 1e-6

IDENTITY = Rotation.identity()


def so3_exp(theta):
    """
    Maps exponential coordinates to a rotation

    :param theta: rotation vector in radians
    :type theta: array-like of 3 floats

    :rtype: scipy.spatial.transform.Rotation
    """
    return Rotation.from_rotvec(as_vector3(theta, "theta"))


def so3_log(R):
    """
    Principal logarithm of ``R``, with norm at most pi

    :type R: scipy.spatial.transform.Rotation
    :rtype: numpy.ndarray
    """
    return R.as_rotvec()


def compose(a, b):
    """Returns ``a * b`` renormalized to a unit quaternion"""
    return Rotation.from_quat((a * b).as_quat())


def right_jacobian(theta):
    """Right Jacobian of SO(3) at ``theta``"""
    theta = np.asarray(theta, dtype=float)
    phi = np.linalg.norm(theta)
    K = skew(theta)
    if phi < _SMALL_ANGLE:
        return np.eye(3) - 0.5 * K + K @ K / 6.0

    return (np.eye(3) - (1.0 - np.cos(phi)) / phi ** 2 * K +
            (phi - np.sin(phi)) / phi ** 3 * K @ K)


def right_jacobian_inv(theta):
    """Inverse of :func:`right_jacobian`"""
    theta = np.asarray(theta, dtype=float)
    phi = np.linalg.norm(theta)
    K = skew(theta)
    if phi < _SMALL_ANGLE:
        return np.eye(3) + 0.5 * K + K @ K / 12.0

    coef = 1.0 / phi ** 2 - (1.0 + np.cos(phi)) / (2.0 * phi * np.sin(phi))
    return np.eye(3) + 0.5 * K + coef * K @ K


@dataclass(frozen=True)
class Extrinsic:
    """
    Rigid transform from a sensor frame into the IMU frame

    ``rot`` is the rotation I_R_S and ``trans`` the sensor origin
    expressed in the IMU frame, I_p_S.
    """
    rot: Rotation
    trans: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'trans', frozen(as_vector3(self.trans,
                                                            "trans")))

    @classmethod
    def identity(cls):
        return cls(IDENTITY, np.zeros(3))

    @classmethod
    def from_translation(cls, trans, rotvec=(0.0, 0.0, 0.0)):
        return cls(Rotation.from_rotvec(as_vector3(rotvec, "rotvec")),
                   trans)

    def transform(self, points):
        """Maps ``points`` of shape (n, 3) from the sensor to the IMU frame"""
        return self.rot.apply(points) + self.trans


@dataclass(frozen=True)
class ExtrinsicsConfig:
    """
    Mounting of the three sensors on the IMU body, as configured

    Translations in meters (IMU frame), rotations as rotation vectors.
    The UWB antenna is a point, so it has no rotation.
    """
    lidar_trans: tuple = (0.1, 0.0, 0.35)
    lidar_rotvec: tuple = (0.0, 0.0, 0.0)
    uwb_trans: tuple = (0.0, 0.0, 0.5)
    wheel_trans: tuple = (-0.2, 0.0, -0.25)
    wheel_rotvec: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        for name in ('lidar_trans', 'lidar_rotvec', 'uwb_trans',
                     'wheel_trans', 'wheel_rotvec'):
            value = as_vector3(getattr(self, name), name)
            object.__setattr__(self, name, tuple(float(v) for v in value))

    def build(self):
        """Returns the (LiDAR, UWB, wheel) :class:`Extrinsic` triple"""
        return (Extrinsic.from_translation(self.lidar_trans,
                                           self.lidar_rotvec),
                Extrinsic.from_translation(self.uwb_trans),
                Extrinsic.from_translation(self.wheel_trans,
                                           self.wheel_rotvec))


@dataclass(frozen=True)
class NavState:
    """
    Full navigation state

    Position, velocity and gravity are expressed in the global frame G;
    biases in the IMU frame. The three extrinsics map the LiDAR (L),
    UWB antenna (U) and wheel odometer (W) frames into the IMU frame.
    """
    rot_GI: Rotation
    pos_GI: np.ndarray
    vel_GI: np.ndarray
    bias_gyro: np.ndarray
    bias_accel: np.ndarray
    gravity_G: np.ndarray
    extr_L: Extrinsic
    extr_U: Extrinsic
    extr_W: Extrinsic

    def __post_init__(self):
        for name in ('pos_GI', 'vel_GI', 'bias_gyro', 'bias_accel',
                     'gravity_G'):
            value = frozen(as_vector3(getattr(self, name), name))
            object.__setattr__(self, name, value)

    @classmethod
    def identity(cls, gravity=(0.0, 0.0, -consts.STANDARD_GRAVITY),
                 extr_L=None, extr_U=None, extr_W=None):
        """Returns a state at the origin, at rest, with zero biases"""
        zero = np.zeros(3)
        return cls(IDENTITY, zero, zero, zero, zero, gravity,
                   extr_L or Extrinsic.identity(),
                   extr_U or Extrinsic.identity(),
                   extr_W or Extrinsic.identity())

    def with_(self, **changes):
        """Returns a copy of this state with ``changes`` applied"""
        return replace(self, **changes)

    def extrinsic(self, name):
        """Returns the extrinsic named ``'L'``, ``'U'`` or ``'W'``"""
        return {'L': self.extr_L, 'U': self.extr_U, 'W': self.extr_W}[name]

    def to_vector(self):
        """
        Flat view for debugging: rotations as rotation vectors

        Not a chart of the manifold; use :func:`boxminus` for differences.
        """
        parts = [self.rot_GI.as_rotvec(), self.pos_GI, self.vel_GI,
                 self.bias_gyro, self.bias_accel, self.gravity_G]
        for extr in (self.extr_L, self.extr_U, self.extr_W):
            parts.extend([extr.rot.as_rotvec(), extr.trans])

        return np.concatenate(parts)


def check_error_state(delta):
    """
    Validates a tangent vector

    :raise ValueError: wrong size or non-finite entries
    :rtype: numpy.ndarray
    """
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (consts.STATE_DIM,):
        raise ValueError("error state must have %d entries, got shape %s"
                         % (consts.STATE_DIM, delta.shape))

    if not np.all(np.isfinite(delta)):
        raise ValueError("error state has non-finite entries")

    return delta


def _rot_plus(R, dtheta):
    if not np.any(dtheta):
        return R

    return compose(R, Rotation.from_rotvec(dtheta))


def boxplus(x, delta):
    """
    Applies the tangent vector ``delta`` to the state ``x``

    Rotation blocks are updated as R Exp(dtheta), every other block is
    added componentwise.

    :type x: NavState
    :param delta: error state of 36 entries
    :rtype: NavState
    """
    d = check_error_state(delta)
    extrs = []
    for name in ('L', 'U', 'W'):
        s_rot, s_pos = consts.EXTRINSIC_SLICES[name]
        extr = x.extrinsic(name)
        extrs.append(Extrinsic(_rot_plus(extr.rot, d[s_rot]),
                               extr.trans + d[s_pos]))

    return NavState(
        rot_GI=_rot_plus(x.rot_GI, d[consts.SLICE_ROT]),
        pos_GI=x.pos_GI + d[consts.SLICE_POS],
        vel_GI=x.vel_GI + d[consts.SLICE_VEL],
        bias_gyro=x.bias_gyro + d[consts.SLICE_BG],
        bias_accel=x.bias_accel + d[consts.SLICE_BA],
        gravity_G=x.gravity_G + d[consts.SLICE_GRAV],
        extr_L=extrs[0], extr_U=extrs[1], extr_W=extrs[2])


def _rot_minus(a, b):
    return (b.inv() * a).as_rotvec()


def boxminus(x, y):
    """
    Returns the tangent vector taking ``y`` to ``x``

    Inverse of :func:`boxplus`: ``boxminus(boxplus(y, d), y) == d`` for
    rotation blocks below pi.

    :rtype: numpy.ndarray
    """
    d = np.zeros(consts.STATE_DIM)
    d[consts.SLICE_ROT] = _rot_minus(x.rot_GI, y.rot_GI)
    d[consts.SLICE_POS] = x.pos_GI - y.pos_GI
    d[consts.SLICE_VEL] = x.vel_GI - y.vel_GI
    d[consts.SLICE_BG] = x.bias_gyro - y.bias_gyro
    d[consts.SLICE_BA] = x.bias_accel - y.bias_accel
    d[consts.SLICE_GRAV] = x.gravity_G - y.gravity_G
    for name in ('L', 'U', 'W'):
        s_rot, s_pos = consts.EXTRINSIC_SLICES[name]
        ex, ey = x.extrinsic(name), y.extrinsic(name)
        d[s_rot] = _rot_minus(ex.rot, ey.rot)
        d[s_pos] = ex.trans - ey.trans

    return d


def check_covariance(P, rtol=1e-9):
    """
    Validates a covariance matrix

    :raise ValueError: wrong shape, not symmetric or not PSD
    :rtype: numpy.ndarray
    """
    P = np.asarray(P, dtype=float)
    n = consts.STATE_DIM
    if P.shape != (n, n):
        raise ValueError("covariance must be %dx%d, got %s" % (n, n, P.shape))

    scale = max(np.abs(P).max(), 1e-300)
    if np.abs(P - P.T).max() > rtol * scale:
        raise ValueError("covariance is not symmetric")

    trace = np.trace(P)
    if np.linalg.eigvalsh(P).min() < -rtol * max(trace, 0.0):
        raise ValueError("covariance is not positive semidefinite")

    return P
