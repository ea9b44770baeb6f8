# see LICENSE
"""
Residuals, noise models and Jacobians of the four constraint families

Every function returns a :class:`ResidualBlock` whose ``H`` is the
Jacobian of the residual itself with respect to the right-perturbed error
state, i.e. ``r(x [+] d) ~= r + H d``. Residuals are *measured minus
predicted* except for the point-to-plane distance, which has no separate
measurement.

Providers (:class:`LidarPlaneProvider`, :class:`UwbRangeProvider`,
:class:`UwbFixProvider`, :class:`WheelProvider`) wrap one measurement
and are called by the iterated update with the current iterate, so every
iteration relinearizes at the iterate; plane correspondences are searched
again once the iterate has moved the scan far enough.
"""

from dataclasses import dataclass
import logging

import numpy as np
from scipy import linalg
from scipy.stats import chi2

from liuw.errors import AntennaAtAnchor, SingularInnovation, UnknownAnchor
from liuw.estimation import consts
from liuw.estimation.plane_map import match_planes
from liuw.utils import skew

logger = logging.getLogger(__name__)

LIDAR = 'lidar'
UWB_POSITION = 'uwb_position'
UWB_DISTANCE = 'uwb_distance'
WHEEL = 'wheel'

SOURCES = (LIDAR, UWB_POSITION, UWB_DISTANCE, WHEEL)

# closest the antenna may get to an anchor, meters
MIN_ANCHOR_DISTANCE = 0.1


@dataclass(frozen=True)
class MeasurementConfig:
    """
    Noise and gating parameters not carried by the samples themselves

    :ivar sigma_lidar: point-to-plane noise, meters
    :ivar gate_prob: chi-square quantile used to gate UWB measurements
    :ivar lidar_rematch_dist: plane correspondences are searched again
                              once an iterate moves some scan point
                              farther than this from where it was last
                              matched, meters
    :ivar lidar_min_info: position directions whose LiDAR information is
                          below this fraction of the strongest direction
                          are removed from the LiDAR rows (0 keeps all)
    """
    sigma_lidar: float = 0.05
    gate_prob: float = 0.99
    lidar_rematch_dist: float = 0.05
    lidar_min_info: float = 0.1

    def __post_init__(self):
        if not self.sigma_lidar > 0:
            raise ValueError("sigma_lidar must be positive")

        if not 0 < self.gate_prob < 1:
            raise ValueError("gate_prob must lie in (0, 1)")

        if not self.lidar_rematch_dist >= 0:
            raise ValueError("lidar_rematch_dist must be nonnegative")

        if not 0 <= self.lidar_min_info < 1:
            raise ValueError("lidar_min_info must lie in [0, 1)")


@dataclass(frozen=True)
class ResidualBlock:
    """
    Linearized measurement

    ``R_meas`` is either the full (m, m) covariance or, for independent
    rows, the (m,) vector of variances.
    """
    source: str
    r: np.ndarray
    H: np.ndarray
    R_meas: np.ndarray

    def __post_init__(self):
        r = np.atleast_1d(np.asarray(self.r, dtype=float))
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        R = np.asarray(self.R_meas, dtype=float)
        if R.ndim == 0:
            R = R.reshape(1)

        m = len(r)
        if H.shape != (m, consts.STATE_DIM):
            raise ValueError("H must be %dx%d, got %s"
                             % (m, consts.STATE_DIM, H.shape))

        if R.shape not in ((m,), (m, m)):
            raise ValueError("R_meas must be (%d,) or (%d, %d), got %s"
                             % (m, m, m, R.shape))

        if R.ndim == 1 and np.any(R <= 0):
            raise ValueError("measurement variances must be positive")

        object.__setattr__(self, 'r', r)
        object.__setattr__(self, 'H', H)
        object.__setattr__(self, 'R_meas', R)

    def __len__(self):
        return len(self.r)

    @property
    def covariance(self):
        """``R_meas`` as a full matrix"""
        if self.R_meas.ndim == 1:
            return np.diag(self.R_meas)

        return self.R_meas

    def whitened(self):
        """
        Returns (r, H) scaled so the measurement noise becomes identity

        :raise SingularInnovation: a full ``R_meas`` is not positive
                                   definite
        """
        if self.R_meas.ndim == 1:
            scale = 1.0 / np.sqrt(self.R_meas)
            return self.r * scale, self.H * scale[:, None]

        try:
            L = linalg.cholesky(self.R_meas, lower=True)
        except linalg.LinAlgError:
            raise SingularInnovation("%s noise covariance is not positive "
                                     "definite" % self.source)

        return (linalg.solve_triangular(L, self.r, lower=True),
                linalg.solve_triangular(L, self.H, lower=True))


def lidar_residuals(x, points_L, normals, plane_points, sigma_L):
    """
    Stacked point-to-plane residuals, one row per point

    r = u^T (R (R_L p_L + t_L) + p - q)

    :type x: NavState
    :param points_L: points in the LiDAR frame, shape (n, 3)
    :param normals: unit plane normals, shape (n, 3)
    :param plane_points: a point of each plane, shape (n, 3)
    :param sigma_L: noise of the distance, meters
    :rtype: ResidualBlock
    """
    p_L = np.asarray(points_L, dtype=float).reshape(-1, 3)
    u = np.asarray(normals, dtype=float).reshape(-1, 3)
    q = np.asarray(plane_points, dtype=float).reshape(-1, 3)
    R = x.rot_GI.as_matrix()
    R_L = x.extr_L.rot.as_matrix()

    p_I = p_L @ R_L.T + x.extr_L.trans
    p_G = p_I @ R.T + x.pos_GI
    r = np.einsum('ij,ij->i', u, p_G - q)

    u_I = u @ R
    u_L = u_I @ R_L
    H = np.zeros((len(r), consts.STATE_DIM))
    H[:, consts.SLICE_ROT] = -np.cross(u_I, p_I)
    H[:, consts.SLICE_POS] = u
    H[:, consts.SLICE_EXTR_L_ROT] = -np.cross(u_L, p_L)
    H[:, consts.SLICE_EXTR_L_POS] = u_I
    return ResidualBlock(LIDAR, r, H, np.full(len(r), sigma_L ** 2))


def weak_directions(block, min_info):
    """
    Position directions poorly constrained by ``block``

    The whitened position information H_p^T H_p is eigendecomposed; a
    direction is weak when its eigenvalue is below ``min_info`` times
    the largest one.

    :rtype: numpy.ndarray of shape (3, j), unit columns (global frame)
    """
    _, H = block.whitened()
    H_p = H[:, consts.SLICE_POS]
    values, vectors = np.linalg.eigh(H_p.T @ H_p)
    if not values[-1] > 0:
        return np.zeros((3, 0))

    return vectors[:, values < min_info * values[-1]]


def remove_directions(block, x, directions):
    """
    Drops what ``block`` says about translations along ``directions``

    The position columns lose their component along each direction, and
    so do the LiDAR translation columns (the same direction seen in the
    IMU frame). Residuals are left unchanged.

    :param directions: unit columns, global frame, shape (3, j)
    :rtype: ResidualBlock
    """
    V = np.asarray(directions, dtype=float).reshape(3, -1)
    if not V.shape[1]:
        return block

    H = block.H.copy()
    along = H[:, consts.SLICE_POS] @ V
    H[:, consts.SLICE_POS] -= along @ V.T
    H[:, consts.SLICE_EXTR_L_POS] -= along @ (V.T @ x.rot_GI.as_matrix())
    return ResidualBlock(block.source, block.r, H, block.R_meas)


def lidar_residual(x, p_L, plane, sigma_L):
    """
    Point-to-plane distance of one LiDAR point

    :type x: NavState
    :param p_L: point in the LiDAR frame
    :type plane: PlaneFeature
    :rtype: ResidualBlock
    """
    return lidar_residuals(x, np.reshape(p_L, (1, 3)), plane.normal[None],
                           plane.point[None], sigma_L)


def antenna_position(x):
    """Global position of the UWB antenna"""
    return x.pos_GI + x.rot_GI.apply(x.extr_U.trans)


def uwb_position_residual(x, fix):
    """
    r = p_fix - p_I - R t_U

    :type x: NavState
    :type fix: UwbPositionFix
    :rtype: ResidualBlock
    """
    R = x.rot_GI.as_matrix()
    r = fix.pos - antenna_position(x)
    H = np.zeros((3, consts.STATE_DIM))
    H[:, consts.SLICE_ROT] = R @ skew(x.extr_U.trans)
    H[:, consts.SLICE_POS] = -np.eye(3)
    H[:, consts.SLICE_EXTR_U_POS] = -R
    return ResidualBlock(UWB_POSITION, r, H, fix.sigma ** 2)


def uwb_distance_residual(x, s, anchors):
    """
    r = d_meas - |a - p_U|

    :type x: NavState
    :type s: UwbRangeSample
    :param anchors: mapping anchor_id -> global position
                    (see :func:`liuw.records.anchor_index`)

    :raise UnknownAnchor: ``s.anchor_id`` is not in ``anchors``
    :raise AntennaAtAnchor: predicted distance of 0.1 m or less

    :rtype: ResidualBlock
    """
    try:
        anchor = anchors[s.anchor_id]
    except KeyError:
        raise UnknownAnchor("anchor %d is not configured" % s.anchor_id)

    p_U = antenna_position(x)
    diff = anchor - p_U
    d = np.linalg.norm(diff)
    if d <= MIN_ANCHOR_DISTANCE:
        raise AntennaAtAnchor("antenna is %.3f m from anchor %d"
                              % (d, s.anchor_id))

    u = diff / d
    R = x.rot_GI.as_matrix()
    u_I = u @ R
    H = np.zeros((1, consts.STATE_DIM))
    H[0, consts.SLICE_ROT] = -np.cross(u_I, x.extr_U.trans)
    H[0, consts.SLICE_POS] = u
    H[0, consts.SLICE_EXTR_U_POS] = u_I
    return ResidualBlock(UWB_DISTANCE, [s.range - d], H, [s.sigma ** 2])


def wheel_residual(x, s, omega_I):
    """
    Velocity of the wheel frame origin, seen in the wheel frame

    r = v_meas - R_W^T (R^T v + w x t_W)

    The gyro-bias column assumes ``omega_I`` is the raw gyro reading
    corrected with ``x.bias_gyro``.

    :type x: NavState
    :type s: WheelSample
    :param omega_I: bias-corrected angular rate, IMU frame
    :rtype: ResidualBlock
    """
    omega = np.asarray(omega_I, dtype=float)
    R = x.rot_GI.as_matrix()
    R_W = x.extr_W.rot.as_matrix()
    t_W = x.extr_W.trans

    v_I = R.T @ x.vel_GI
    v_origin = v_I + np.cross(omega, t_W)
    predicted = R_W.T @ v_origin
    r = s.vel_W - predicted

    H = np.zeros((3, consts.STATE_DIM))
    H[:, consts.SLICE_ROT] = -R_W.T @ skew(v_I)
    H[:, consts.SLICE_VEL] = -R_W.T @ R.T
    H[:, consts.SLICE_BG] = -R_W.T @ skew(t_W)
    H[:, consts.SLICE_EXTR_W_ROT] = -skew(predicted)
    H[:, consts.SLICE_EXTR_W_POS] = -R_W.T @ skew(omega)
    return ResidualBlock(WHEEL, r, H, s.sigma ** 2)


def chi2_gate_threshold(dim, prob=0.99):
    """Chi-square quantile ``prob`` with ``dim`` degrees of freedom"""
    return chi2.ppf(prob, dim)


def mahalanobis(block, P):
    """
    Normalized innovation squared r^T (H P H^T + R)^-1 r

    :raise SingularInnovation: the innovation covariance is not
                               positive definite
    """
    S = block.H @ P @ block.H.T + block.covariance
    try:
        factor = linalg.cho_factor(S)
    except linalg.LinAlgError:
        raise SingularInnovation("%s innovation covariance is singular"
                                 % block.source)

    stat = float(block.r @ linalg.cho_solve(factor, block.r))
    if not np.isfinite(stat):
        raise SingularInnovation("%s innovation is not finite" % block.source)

    return stat


def gate(block, P_prior, prob=0.99):
    """
    Chi-square test of ``block`` against the prior covariance

    :return: True to accept; the block is rejected only when its
             statistic is strictly above the quantile
    :rtype: bool
    """
    stat = mahalanobis(block, P_prior)
    threshold = chi2_gate_threshold(len(block), prob)
    if stat > threshold:
        logger.debug("gate: rejected %s block, %.2f > %.2f"
                     % (block.source, stat, threshold))
        return False

    return True


class LidarPlaneProvider:
    """
    Matches a scan against the map and linearizes it at each iterate

    Correspondences are searched again only when the iterate has moved
    some point by more than ``rematch_dist`` since the last search
    (0 searches at every call). With ``min_info`` positive, translations
    the matched planes barely constrain are dropped from the rows (see
    :func:`weak_directions`).

    :ivar matched: number of points matched at the last search
    :ivar searches: number of map searches so far
    :ivar weak: weak directions removed at the last call, shape (3, j)
    """
    source = LIDAR

    def __init__(self, plane_map, points_L, sigma_L, rematch_dist=0.0,
                 min_info=0.0):
        self.plane_map = plane_map
        self.points_L = np.asarray(points_L, dtype=float).reshape(-1, 3)
        self.sigma_L = sigma_L
        self.rematch_dist = rematch_dist
        self.min_info = min_info
        self.matched = 0
        self.searches = 0
        self.weak = np.zeros((3, 0))
        self._matched_at = None
        self._planes = None

    def _search(self, p_G):
        valid, normals, centers, _ = match_planes(self.plane_map, p_G)
        self._matched_at = p_G
        self._planes = (valid, normals[valid], centers[valid])
        self.matched = int(valid.sum())
        self.searches += 1
        logger.debug("lidar: %d of %d points matched"
                     % (self.matched, len(p_G)))

    def __call__(self, x):
        if not len(self.points_L) or not len(self.plane_map):
            self.matched = 0
            return None

        p_G = x.rot_GI.apply(x.extr_L.transform(self.points_L)) + x.pos_GI
        if self._matched_at is None or np.max(np.linalg.norm(
                p_G - self._matched_at, axis=1)) > self.rematch_dist:
            self._search(p_G)

        if not self.matched:
            self.weak = np.zeros((3, 0))
            return None

        valid, normals, centers = self._planes
        block = lidar_residuals(x, self.points_L[valid], normals, centers,
                                self.sigma_L)
        if self.min_info > 0:
            self.weak = weak_directions(block, self.min_info)
            block = remove_directions(block, x, self.weak)

        return block


class UwbFixProvider:
    source = UWB_POSITION

    def __init__(self, fix):
        self.fix = fix

    def __call__(self, x):
        return uwb_position_residual(x, self.fix)


class UwbRangeProvider:
    source = UWB_DISTANCE

    def __init__(self, sample, anchors):
        self.sample = sample
        self.anchors = anchors

    def __call__(self, x):
        return uwb_distance_residual(x, self.sample, self.anchors)


class WheelProvider:
    """Wheel residual with the angular rate recomputed from the iterate"""
    source = WHEEL

    def __init__(self, sample, gyro):
        self.sample = sample
        self.gyro = np.asarray(gyro, dtype=float)

    def __call__(self, x):
        return wheel_residual(x, self.sample, self.gyro - x.bias_gyro)
