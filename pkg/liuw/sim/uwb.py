# see LICENSE
"""
UWB positioning: range trilateration and epoch-to-epoch smoothing

:func:`trilaterate` solves one epoch by nonlinear least squares;
:class:`UwbPositioner` gates incoming ranges against its prediction and
smooths the epoch solutions with a constant-position Kalman filter, which
is what turns raw ranges into :class:`~liuw.records.UwbPositionFix`
records.
"""

import logging

import numpy as np
from scipy import linalg
from scipy.optimize import least_squares
from scipy.stats import chi2

from liuw.errors import DegenerateGeometry, InsufficientAnchors, UnknownAnchor
from liuw.records import UwbPositionFix

logger = logging.getLogger(__name__)


def _anchor_matrix(ranges, anchors):
    try:
        return np.array([anchors[s.anchor_id] for s in ranges])
    except KeyError as e:
        raise UnknownAnchor("anchor %s is not configured" % e)


def check_geometry(points, tol=1e-6):
    """
    :raise DegenerateGeometry: ``points`` are collinear (or coincident)
    """
    centered = points - points.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[0] == 0 or sv[1] <= tol * sv[0]:
        raise DegenerateGeometry("anchors are collinear")


def trilaterate(ranges, anchors, guess=None):
    """
    Position minimizing the squared range residuals of one epoch

    :param ranges: samples of one epoch, at least three distinct anchors
    :type ranges: list of UwbRangeSample
    :param anchors: mapping anchor_id -> position
    :param guess: starting point; the anchor centroid pushed below the
                  anchors' mean height by default
    :raise InsufficientAnchors: fewer than three distinct anchors
    :raise DegenerateGeometry: the anchors are collinear
    :return: the fix, its sigma taken from the Gauss-Newton covariance
    :rtype: UwbPositionFix
    """
    if len(set(s.anchor_id for s in ranges)) < 3:
        raise InsufficientAnchors("%d anchors in the epoch, 3 needed"
                                  % len(set(s.anchor_id for s in ranges)))

    pos = _anchor_matrix(ranges, anchors)
    check_geometry(pos)
    d = np.array([s.range for s in ranges])
    sigma = np.array([s.sigma for s in ranges])
    if guess is None:
        guess = pos.mean(axis=0) - np.array([0.0, 0.0, 1.0])

    def residuals(p):
        return (np.linalg.norm(pos - p, axis=1) - d) / sigma

    def jacobian(p):
        diff = p - pos
        return diff / (np.linalg.norm(diff, axis=1) * sigma)[:, None]

    sol = least_squares(residuals, np.asarray(guess, dtype=float),
                        jac=jacobian, method='lm', xtol=1e-12, ftol=1e-12,
                        gtol=1e-12)
    J = jacobian(sol.x)
    try:
        cov = linalg.inv(J.T @ J)
    except linalg.LinAlgError:
        raise DegenerateGeometry("range geometry does not fix a position")

    t = max(s.t for s in ranges)
    return UwbPositionFix(t, sol.x, np.sqrt(np.maximum(np.diag(cov),
                                                       1e-12)))


class UwbPositioner:
    """
    Constant-position Kalman smoother over epoch fixes

    :ivar q_pos: position random walk, m^2/s
    :ivar gate_prob: chi-square quantile for the per-range gate
    """

    def __init__(self, anchors, q_pos=0.5, gate_prob=0.99):
        self.anchors = anchors
        self.q_pos = q_pos
        self.gate_prob = gate_prob
        self.pos = None
        self.P = None
        self.t = None

    def _predict(self, t):
        self.P = self.P + self.q_pos * (t - self.t) * np.eye(3)
        self.t = t

    def _gate(self, ranges):
        if self.pos is None:
            return list(ranges)

        threshold = chi2.ppf(self.gate_prob, 1)
        kept = []
        for s in ranges:
            diff = self.pos - self.anchors[s.anchor_id]
            d = np.linalg.norm(diff)
            u = diff / d
            S = u @ self.P @ u + s.sigma ** 2
            if (s.range - d) ** 2 / S <= threshold:
                kept.append(s)
            else:
                logger.debug("uwb: gated range to anchor %d at t=%.3f"
                             % (s.anchor_id, s.t))

        return kept

    def step(self, ranges):
        """
        Processes the ranges of one epoch

        :return: the smoothed fix, or None when fewer than three ranges
                 survive the gate
        :rtype: UwbPositionFix or None
        """
        if not ranges:
            return None

        t = max(s.t for s in ranges)
        if self.pos is not None:
            self._predict(t)

        kept = self._gate(ranges)
        try:
            fix = trilaterate(kept, self.anchors, guess=self.pos)
        except InsufficientAnchors:
            return None

        R = np.diag(fix.sigma ** 2)
        if self.pos is None:
            self.pos, self.P, self.t = fix.pos.copy(), R, t
        else:
            S = self.P + R
            K = linalg.solve(S, self.P, assume_a='pos').T
            self.pos = self.pos + K @ (fix.pos - self.pos)
            self.P = (np.eye(3) - K) @ self.P
            self.P = 0.5 * (self.P + self.P.T)

        return UwbPositionFix(t, self.pos, np.sqrt(np.diag(self.P)))
