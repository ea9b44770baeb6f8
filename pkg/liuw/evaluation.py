# see LICENSE
"""
Trajectory accuracy and filter consistency

The accuracy figures are those of a field run with sparse surveyed
points: ``TotalErr`` sums the position error over N checkpoints and
``AvgErr`` divides it by N. Both trajectories are interpolated linearly
in position at the checkpoint times.
"""

from dataclasses import dataclass
import logging

import numpy as np
from scipy.stats import chi2

from liuw.errors import EmptyStream, NoOverlap
from liuw.records import GROUND_TRUTH

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PositionTrack:
    """Timestamped positions, strictly increasing in time"""
    t: np.ndarray
    pos: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).reshape(-1)
        pos = np.asarray(self.pos, dtype=float).reshape(-1, 3)
        if len(t) != len(pos):
            raise ValueError("%d times for %d positions" % (len(t), len(pos)))

        if len(t) and np.any(np.diff(t) <= 0):
            raise ValueError("track times must be strictly increasing")

        object.__setattr__(self, 't', t)
        object.__setattr__(self, 'pos', pos)

    def __len__(self):
        return len(self.t)

    @property
    def span(self):
        return self.t[0], self.t[-1]

    def at(self, times):
        """
        Linearly interpolated positions

        :raise NoOverlap: a time lies outside the track
        """
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if not len(self):
            raise NoOverlap("empty track")

        lo, hi = self.span
        outside = (times < lo) | (times > hi)
        if np.any(outside):
            raise NoOverlap("time %.6f outside [%.6f, %.6f]"
                            % (times[outside][0], lo, hi))

        return np.column_stack([np.interp(times, self.t, self.pos[:, i])
                                for i in range(3)])


def ground_truth_track(records):
    """
    Collects the ground-truth positions of a log (records or samples)

    :raise EmptyStream: the log holds no ground truth
    """
    samples = [getattr(r, 'payload', r) for r in records
               if getattr(r, 'kind', GROUND_TRUTH) == GROUND_TRUTH]
    if not samples:
        raise EmptyStream("no ground-truth records")

    return PositionTrack([s.t for s in samples], [s.pos for s in samples])


def checkpoint_times(estimated, ground_truth, n=15):
    """``n`` evenly spaced times over the overlap of both tracks"""
    if n < 1:
        raise ValueError("at least one checkpoint is needed")

    lo = max(estimated.t[0], ground_truth.t[0])
    hi = min(estimated.t[-1], ground_truth.t[-1])
    if hi < lo:
        raise NoOverlap("tracks do not overlap in time")

    return np.linspace(lo, hi, n)


def evaluate(estimated, ground_truth, times):
    """
    Accuracy over the checkpoints ``times``

    :type estimated: PositionTrack
    :type ground_truth: PositionTrack
    :raise NoOverlap: a checkpoint lies outside either track
    :return: ``{'TotalErr', 'AvgErr', 'N', 'final_error'}``; the final
             error is taken at the last estimated pose
    :rtype: dict
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if not len(times):
        raise ValueError("at least one checkpoint is needed")

    err = np.linalg.norm(estimated.at(times) - ground_truth.at(times), axis=1)
    t_last = estimated.t[-1]
    final = np.linalg.norm(estimated.pos[-1] - ground_truth.at(t_last)[0])
    total = float(err.sum())
    logger.debug("evaluated %d checkpoints, worst %.3f m"
                 % (len(err), err.max()))
    return {'TotalErr': total, 'AvgErr': total / len(err), 'N': len(err),
            'final_error': float(final)}


def result_track(result):
    """Positions of a :class:`~liuw.pipeline.PipelineResult`"""
    return PositionTrack(result.times, result.positions)


def evaluate_result(result, n=15):
    """Evaluates a pipeline run against the ground truth it carries"""
    est = result_track(result)
    gt = ground_truth_track(result.ground_truth)
    return evaluate(est, gt, checkpoint_times(est, gt, n))


def position_nees(result, ground_truth):
    """
    Normalized estimation error squared of the position at every update

    :type result: PipelineResult
    :type ground_truth: PositionTrack
    :return: (times, nees) over the updates inside the ground-truth span
    """
    lo, hi = ground_truth.span
    keep = (result.times >= lo) & (result.times <= hi)
    times = result.times[keep]
    err = result.positions[keep] - ground_truth.at(times)
    covs = np.array([u.pos_cov for u, k in zip(result.updates, keep) if k])
    nees = np.einsum('ni,ni->n', err,
                     np.linalg.solve(covs, err[:, :, None])[:, :, 0])
    return times, nees


def nees_envelope(dim=3, runs=1, prob=0.95):
    """
    Two-sided chi-square bounds on the NEES averaged over ``runs``
    independent runs
    """
    dof = dim * runs
    alpha = (1 - prob) / 2
    return chi2.ppf(alpha, dof) / runs, chi2.ppf(1 - alpha, dof) / runs
