# see LICENSE
"""
Degeneracy degree and direction from the pose covariance

The leading 6x6 block B of the covariance (rotation rows first) is
squared, M = B^T B, and split into rotation, translation and coupling
blocks. Each diagonal block is eigendecomposed; the reported sigmas are
the square roots of its eigenvalues, so they live on the scale of the
covariance itself.
"""

from dataclasses import dataclass

import numpy as np

from liuw.utils import fmt_sig

DEGRADATION_HEADER = ('t', 'sigma_p1', 'sigma_p2', 'sigma_p3',
                      'sigma_r1', 'sigma_r2', 'sigma_r3',
                      'dir_p_x', 'dir_p_y', 'dir_p_z',
                      'degraded_p', 'degraded_r')


@dataclass(frozen=True)
class DegradationThresholds:
    """Flag a block once its largest sigma reaches the threshold"""
    d_p_thre: float = 0.05
    d_r_thre: float = 0.05

    def __post_init__(self):
        if not (self.d_p_thre > 0 and self.d_r_thre > 0):
            raise ValueError("degradation thresholds must be positive")


@dataclass(frozen=True)
class DegradationReport:
    """
    :ivar sigma_p: translation sigmas, descending
    :ivar V_p: matching eigenvectors as columns
    :ivar sigma_r: rotation sigmas, descending
    :ivar V_r: matching eigenvectors as columns
    :ivar coupling: rotation/translation block of M, for reference
    """
    sigma_p: np.ndarray
    V_p: np.ndarray
    sigma_r: np.ndarray
    V_r: np.ndarray
    coupling: np.ndarray
    degraded_p: bool
    degraded_r: bool

    @property
    def dir_p(self):
        """Most uncertain translation direction (global frame)"""
        return self.V_p[:, 0]

    @property
    def dir_r(self):
        """Most uncertain rotation axis (tangent frame)"""
        return self.V_r[:, 0]

    @property
    def degraded(self):
        return self.degraded_p or self.degraded_r

    def to_row(self, t):
        """CSV row matching :data:`DEGRADATION_HEADER`"""
        values = [t] + list(self.sigma_p) + list(self.sigma_r) + \
            list(self.dir_p)
        return [fmt_sig(v) for v in values] + [int(self.degraded_p),
                                               int(self.degraded_r)]


def _descending_eig(M):
    values, vectors = np.linalg.eigh(M)
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]
    # sign: largest-magnitude entry positive
    pick = np.abs(vectors).argmax(axis=0)
    signs = np.sign(vectors[pick, np.arange(3)])
    signs[signs == 0] = 1.0
    return np.sqrt(np.maximum(values, 0.0)), vectors * signs


def analyze(P, thr=None):
    """
    Inspects the pose block of ``P``

    :param P: 36x36 covariance in the tangent ordering
    :type thr: DegradationThresholds
    :rtype: DegradationReport
    """
    thr = thr or DegradationThresholds()
    B = np.asarray(P, dtype=float)[:6, :6]
    M = B.T @ B
    sigma_r, V_r = _descending_eig(M[0:3, 0:3])
    sigma_p, V_p = _descending_eig(M[3:6, 3:6])
    return DegradationReport(
        sigma_p=sigma_p, V_p=V_p, sigma_r=sigma_r, V_r=V_r,
        coupling=M[0:3, 3:6].copy(),
        degraded_p=bool(sigma_p[0] >= thr.d_p_thre),
        degraded_r=bool(sigma_r[0] >= thr.d_r_thre))
